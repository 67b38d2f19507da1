#include "mornmt/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mornmt/text.hpp"

namespace mornmt {

bool Segmentation::round_trips() const {
  std::string joined;
  for (const auto& m : morphs) joined += m;
  return joined == word && stemIndex < morphs.size();
}

std::size_t stem_index(const std::vector<std::string>& morphs) {
  std::size_t best = 0;
  std::size_t bestLen = utf8_decode(morphs[0]).size();
  for (std::size_t i = 1; i < morphs.size(); ++i) {
    const std::size_t len = utf8_decode(morphs[i]).size();
    if (len > bestLen) {
      best = i;
      bestLen = len;
    }
  }
  return best;
}

std::map<std::string, long long> count_words(const std::vector<std::string>& sentences) {
  std::map<std::string, long long> freq;
  for (const auto& s : sentences)
    for (const auto& w : split_ws(s)) ++freq[w];
  return freq;
}

namespace {

// Incremental bookkeeping for the MDL objective. Corpus cost is
// N*ln(N) - sum(c*ln(c)) over morph token counts, which equals
// -sum(c*ln(c/N)); the lexicon charges perMorphCost per distinct morph plus
// charCost per code point of each entry.
class MdlState {
 public:
  explicit MdlState(const MdlConfig& cfg) : cfg_(cfg) {}

  void add(const std::string& m, long long f) {
    auto& c = counts_[m];
    if (c == 0) {
      lexEntries_ += 1;
      lexChars_ += static_cast<long long>(utf8_decode(m).size());
    } else {
      sumClogC_ -= static_cast<double>(c) * std::log(static_cast<double>(c));
    }
    c += f;
    total_ += f;
    sumClogC_ += static_cast<double>(c) * std::log(static_cast<double>(c));
  }

  void remove(const std::string& m, long long f) {
    auto it = counts_.find(m);
    if (it == counts_.end() || it->second < f)
      throw std::logic_error("mdl: removing more of '" + m + "' than present");
    sumClogC_ -= static_cast<double>(it->second) * std::log(static_cast<double>(it->second));
    it->second -= f;
    total_ -= f;
    if (it->second == 0) {
      lexEntries_ -= 1;
      lexChars_ -= static_cast<long long>(utf8_decode(m).size());
      counts_.erase(it);
    } else {
      sumClogC_ +=
          static_cast<double>(it->second) * std::log(static_cast<double>(it->second));
    }
  }

  double cost() const {
    const double n = static_cast<double>(total_);
    const double corpus = total_ > 0 ? n * std::log(n) - sumClogC_ : 0.0;
    const double lexicon = cfg_.perMorphCost * static_cast<double>(lexEntries_) +
                           cfg_.charCost * static_cast<double>(lexChars_);
    return cfg_.corpusWeight * corpus + lexicon;
  }

  long long count(const std::string& m) const {
    auto it = counts_.find(m);
    return it == counts_.end() ? 0 : it->second;
  }

  long long total() const { return total_; }

 private:
  MdlConfig cfg_;
  std::unordered_map<std::string, long long> counts_;
  long long total_ = 0;
  long long lexEntries_ = 0;
  long long lexChars_ = 0;
  double sumClogC_ = 0.0;
};

// Proposes a segmentation of `word` by dynamic programming over split
// points. Each candidate morph token is priced against the current counts
// (plus the word's own frequency); unseen morphs additionally pay their
// lexicon entry cost. The proposal is a search heuristic only — callers
// compare exact total costs before committing.
std::vector<std::string> propose_segmentation(const MdlState& state, const MdlConfig& cfg,
                                              const std::string& word, long long freq) {
  const auto cps = utf8_decode(word);
  const std::size_t n = cps.size();
  const double f = static_cast<double>(freq);
  const double total = static_cast<double>(state.total()) + f;

  std::vector<double> best(n + 1, 0.0);
  std::vector<std::size_t> back(n + 1, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    best[j] = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < j; ++i) {
      const std::string m =
          utf8_encode(std::vector<std::uint32_t>(cps.begin() + i, cps.begin() + j));
      const double c = static_cast<double>(state.count(m));
      double cost = -cfg.corpusWeight * f * std::log((c + f) / total);
      if (c == 0) cost += cfg.perMorphCost + cfg.charCost * static_cast<double>(j - i);
      if (best[i] + cost < best[j]) {
        best[j] = best[i] + cost;
        back[j] = i;
      }
    }
  }

  std::vector<std::string> morphs;
  for (std::size_t j = n; j > 0; j = back[j])
    morphs.push_back(utf8_encode(std::vector<std::uint32_t>(cps.begin() + back[j], cps.begin() + j)));
  std::reverse(morphs.begin(), morphs.end());
  return morphs;
}

}  // namespace

std::map<std::string, Segmentation> segment_corpus(
    const std::map<std::string, long long>& wordFreq, const MdlConfig& cfg) {
  if (wordFreq.empty()) throw std::invalid_argument("segment_corpus: empty word list");

  // Deterministic processing order: frequent words first, ties lexicographic.
  std::vector<std::pair<std::string, long long>> order(wordFreq.begin(), wordFreq.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  // True-cost comparison of candidate analyses of one word; all other
  // words' counts stay in `state`. Returns the winning analysis with its
  // counts committed.
  MdlState state(cfg);
  const auto commit_best = [&](const std::string& word, long long freq,
                               std::vector<std::vector<std::string>> candidates) {
    double bestCost = 0.0;
    std::size_t best = 0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      for (const auto& m : candidates[k]) state.add(m, freq);
      const double c = state.cost();
      for (const auto& m : candidates[k]) state.remove(m, freq);
      if (k == 0 || c < bestCost - 1e-9) {
        bestCost = c;
        best = k;
      }
    }
    for (const auto& m : candidates[best]) state.add(m, freq);
    return candidates[best];
  };

  // Incremental model growth in lexicographic order: a string sorts after
  // all of its prefixes, so stems enter the model before their suffixed
  // extensions and each new word can split against known parts while the
  // model is still small. The refinement passes below clean up early
  // analyses once full counts are available.
  std::map<std::string, std::vector<std::string>> current;
  for (const auto& [w, f] : wordFreq) {
    std::vector<std::vector<std::string>> candidates;
    candidates.push_back({w});
    auto proposal = propose_segmentation(state, cfg, w, f);
    if (proposal.size() > 1) candidates.push_back(std::move(proposal));
    current[w] = commit_best(w, f, std::move(candidates));
  }

  for (int pass = 0; pass < cfg.maxPasses; ++pass) {
    bool changed = false;
    for (const auto& [word, freq] : order) {
      auto& oldMorphs = current[word];
      const double before = state.cost();
      for (const auto& m : oldMorphs) state.remove(m, freq);

      std::vector<std::vector<std::string>> candidates;
      candidates.push_back(oldMorphs);  // incumbent first: ties keep it
      candidates.push_back({word});
      auto proposal = propose_segmentation(state, cfg, word, freq);
      if (proposal.size() > 1) candidates.push_back(std::move(proposal));
      auto chosen = commit_best(word, freq, std::move(candidates));

      if (state.cost() > before + 1e-6)
        throw std::logic_error("mdl: cost increased on accepted update of '" + word + "'");
      if (chosen != oldMorphs) {
        oldMorphs = std::move(chosen);
        changed = true;
      }
    }
    if (!changed) break;
  }

  std::map<std::string, Segmentation> segs;
  for (auto& [word, morphs] : current) {
    Segmentation s;
    s.word = word;
    s.morphs = std::move(morphs);
    s.stemIndex = stem_index(s.morphs);
    segs.emplace(word, std::move(s));
  }
  return segs;
}

double mdl_corpus_cost(const std::map<std::string, long long>& wordFreq,
                       const std::map<std::string, Segmentation>& segs, const MdlConfig& cfg) {
  std::map<std::string, long long> counts;
  for (const auto& [word, freq] : wordFreq) {
    auto it = segs.find(word);
    if (it == segs.end()) {
      counts[word] += freq;
      continue;
    }
    for (const auto& m : it->second.morphs) counts[m] += freq;
  }
  long long total = 0;
  for (const auto& [m, c] : counts) total += c;
  double corpus = 0.0;
  for (const auto& [m, c] : counts)
    corpus -= static_cast<double>(c) *
              std::log(static_cast<double>(c) / static_cast<double>(total));
  double lexicon = 0.0;
  for (const auto& [m, c] : counts)
    lexicon += cfg.perMorphCost + cfg.charCost * static_cast<double>(utf8_decode(m).size());
  return cfg.corpusWeight * corpus + lexicon;
}

// ---------------------------------------------------------------------------
// Affix inventory

std::size_t AffixInventory::affix_type_count() const {
  return prefixes.size() + suffixes.size();
}

std::map<std::string, long long> AffixInventory::combined() const {
  std::map<std::string, long long> all = suffixes;
  for (const auto& [a, c] : prefixes) all[a] += c;
  return all;
}

void AffixInventory::save(const std::string& path) const {
  std::vector<std::string> lines;
  for (const auto& [a, c] : prefixes) lines.push_back(a + "\tprefix\t" + std::to_string(c));
  for (const auto& [a, c] : suffixes) lines.push_back(a + "\tsuffix\t" + std::to_string(c));
  write_lines(path, lines);
}

AffixInventory AffixInventory::load(const std::string& path) {
  AffixInventory inv;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string affix, type, count;
    if (!std::getline(is, affix, '\t') || !std::getline(is, type, '\t') ||
        !std::getline(is, count))
      throw std::runtime_error("malformed affix line in " + path + ": '" + line + "'");
    if (type == "prefix")
      inv.prefixes[affix] = std::stoll(count);
    else if (type == "suffix")
      inv.suffixes[affix] = std::stoll(count);
    else
      throw std::runtime_error("unknown affix type '" + type + "' in " + path);
  }
  return inv;
}

AffixInventory extract_affixes(const std::map<std::string, Segmentation>& segs,
                               const std::map<std::string, long long>& wordFreq,
                               long long minCount) {
  if (segs.empty()) throw std::invalid_argument("extract_affixes: no segmentations");
  if (minCount < 1) throw std::invalid_argument("extract_affixes: minCount must be >= 1");

  AffixInventory inv;
  for (const auto& [word, seg] : segs) {
    auto fit = wordFreq.find(word);
    const long long f = fit == wordFreq.end() ? 1 : fit->second;
    for (std::size_t i = 0; i < seg.morphs.size(); ++i) {
      if (i == seg.stemIndex) continue;
      if (i < seg.stemIndex)
        inv.prefixes[seg.morphs[i]] += f;
      else
        inv.suffixes[seg.morphs[i]] += f;
    }
  }
  std::erase_if(inv.prefixes, [&](const auto& kv) { return kv.second < minCount; });
  std::erase_if(inv.suffixes, [&](const auto& kv) { return kv.second < minCount; });
  return inv;
}

// ---------------------------------------------------------------------------
// Labels

LabelSet::LabelSet(std::vector<std::string> affixes) : affixes_(std::move(affixes)) {
  names_ = {"BOS", "w-space", "stem-C", "UNK-C", "EOS-C"};
  for (std::size_t i = 0; i < affixes_.size(); ++i) {
    names_.push_back(affixes_[i] + "-C");
    toId_[affixes_[i]] = static_cast<int>(kReserved + i);
  }
}

const std::string& LabelSet::name(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= names_.size())
    throw std::out_of_range("label id " + std::to_string(id));
  return names_[id];
}

int LabelSet::affix_label(const std::string& affix) const {
  auto it = toId_.find(affix);
  return it == toId_.end() ? kUnk : it->second;
}

void LabelSet::save(const std::string& path) const { write_lines(path, names_); }

LabelSet LabelSet::load(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.size() < kReserved || lines[0] != "BOS" || lines[1] != "w-space" ||
      lines[2] != "stem-C" || lines[3] != "UNK-C" || lines[4] != "EOS-C")
    throw std::runtime_error("malformed label file: " + path);
  std::vector<std::string> affixes;
  for (std::size_t i = kReserved; i < lines.size(); ++i) {
    const auto& n = lines[i];
    if (n.size() < 2 || n.substr(n.size() - 2) != "-C")
      throw std::runtime_error("malformed label '" + n + "' in " + path);
    affixes.push_back(n.substr(0, n.size() - 2));
  }
  return LabelSet(std::move(affixes));
}

std::uint64_t LabelSet::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& n : names_) h = fnv1a(n + "\n", h);
  return h;
}

LabelSet build_label_vocab(const AffixInventory& inventory) {
  const auto combined = inventory.combined();
  std::vector<std::pair<std::string, long long>> order(combined.begin(), combined.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> affixes;
  affixes.reserve(order.size());
  for (auto& [a, c] : order) affixes.push_back(a);
  return LabelSet(std::move(affixes));
}

std::vector<int> label_characters(const std::string& sentence,
                                  const std::map<std::string, Segmentation>& segs,
                                  const LabelSet& labels) {
  std::vector<int> out;
  out.push_back(LabelSet::kBos);

  const auto cps = utf8_decode(sentence);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (cps[i] == U' ') {
      out.push_back(LabelSet::kSpace);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && cps[j] != U' ') ++j;
    const std::string word = utf8_encode(std::vector<std::uint32_t>(cps.begin() + i, cps.begin() + j));

    auto it = segs.find(word);
    if (it == segs.end()) {
      for (std::size_t k = i; k < j; ++k) out.push_back(LabelSet::kStem);
    } else {
      const Segmentation& seg = it->second;
      for (std::size_t mi = 0; mi < seg.morphs.size(); ++mi) {
        const std::size_t len = utf8_decode(seg.morphs[mi]).size();
        const int label = mi == seg.stemIndex ? LabelSet::kStem
                                              : labels.affix_label(seg.morphs[mi]);
        for (std::size_t k = 0; k < len; ++k) out.push_back(label);
      }
    }
    i = j;
  }

  out.push_back(LabelSet::kEos);
  return out;
}

void save_segmentations(const std::string& path,
                        const std::map<std::string, Segmentation>& segs) {
  std::vector<std::string> lines;
  for (const auto& [word, seg] : segs) {
    std::string line = word + "\t";
    for (std::size_t i = 0; i < seg.morphs.size(); ++i) {
      if (i) line += ' ';
      line += seg.morphs[i];
    }
    lines.push_back(std::move(line));
  }
  write_lines(path, lines);
}

std::map<std::string, Segmentation> load_segmentations(const std::string& path) {
  std::map<std::string, Segmentation> segs;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("malformed segmentation line in " + path + ": '" + line + "'");
    Segmentation s;
    s.word = line.substr(0, tab);
    s.morphs = split_ws(line.substr(tab + 1));
    if (s.morphs.empty())
      throw std::runtime_error("segmentation without morphs in " + path + ": '" + line + "'");
    s.stemIndex = stem_index(s.morphs);
    if (!s.round_trips())
      throw std::runtime_error("segmentation does not round-trip in " + path + ": '" + line +
                               "'");
    segs.emplace(s.word, std::move(s));
  }
  return segs;
}

}  // namespace mornmt
