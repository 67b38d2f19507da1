#include "mornmt/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mornmt {

namespace {
constexpr std::uint32_t kReplacement = 0xFFFD;
}

std::vector<std::uint32_t> utf8_decode(const std::string& s) {
  std::vector<std::uint32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::uint32_t cp = 0;
    std::size_t len = 0;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c >> 4) == 0xE) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c >> 3) == 0x1E) {
      cp = c & 0x07;
      len = 4;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(kReplacement);
      break;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(std::uint32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string utf8_encode(const std::vector<std::uint32_t>& cps) {
  std::string out;
  for (std::uint32_t cp : cps) out += utf8_encode(cp);
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& l : lines) out << l << '\n';
}

ParallelCorpus load_parallel(const std::string& srcPath, const std::string& trgPath) {
  auto src = read_lines(srcPath);
  auto trg = read_lines(trgPath);
  if (src.size() != trg.size())
    throw std::runtime_error("parallel files differ in length: " + srcPath + " has " +
                             std::to_string(src.size()) + " lines, " + trgPath + " has " +
                             std::to_string(trg.size()));
  ParallelCorpus c;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (split_ws(src[i]).empty() || split_ws(trg[i]).empty()) continue;
    c.src.push_back(src[i]);
    c.trg.push_back(trg[i]);
  }
  return c;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// CharVocab

CharVocab::CharVocab(std::vector<std::uint32_t> kept) : kept_(std::move(kept)) {
  for (std::size_t i = 0; i < kept_.size(); ++i)
    toId_[kept_[i]] = static_cast<int>(kReserved + i);
}

int CharVocab::id_of(std::uint32_t cp) const {
  if (cp == U' ') return kSpace;
  auto it = toId_.find(cp);
  return it == toId_.end() ? kUnk : it->second;
}

std::string CharVocab::symbol(int id) const {
  switch (id) {
    case kUnk: return "<unk-char>";
    case kBos: return "<bos>";
    case kEos: return "<eos>";
    case kSpace: return "<w-space>";
    default: break;
  }
  const std::size_t k = static_cast<std::size_t>(id) - kReserved;
  if (k >= kept_.size()) throw std::out_of_range("char id " + std::to_string(id));
  return utf8_encode(kept_[k]);
}

std::vector<int> CharVocab::encode(const std::string& sentence) const {
  std::vector<int> ids;
  ids.push_back(kBos);
  for (std::uint32_t cp : utf8_decode(sentence)) ids.push_back(id_of(cp));
  ids.push_back(kEos);
  return ids;
}

std::string CharVocab::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kBos || id == kEos) continue;
    if (id == kSpace) {
      out += ' ';
    } else if (id == kUnk) {
      out += utf8_encode(kReplacement);
    } else {
      out += symbol(id);
    }
  }
  return out;
}

void CharVocab::save(const std::string& path) const {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < size(); ++i) lines.push_back(symbol(static_cast<int>(i)));
  write_lines(path, lines);
}

CharVocab CharVocab::load(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.size() < kReserved || lines[0] != "<unk-char>" || lines[1] != "<bos>" ||
      lines[2] != "<eos>" || lines[3] != "<w-space>")
    throw std::runtime_error("malformed char vocab file: " + path);
  std::vector<std::uint32_t> kept;
  for (std::size_t i = kReserved; i < lines.size(); ++i) {
    auto cps = utf8_decode(lines[i]);
    if (cps.size() != 1)
      throw std::runtime_error("malformed char vocab entry at line " + std::to_string(i + 1) +
                               " in " + path);
    kept.push_back(cps[0]);
  }
  return CharVocab(std::move(kept));
}

std::uint64_t CharVocab::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < size(); ++i) h = fnv1a(symbol(static_cast<int>(i)) + "\n", h);
  return h;
}

CharVocab build_char_vocab(const std::vector<std::string>& targetSentences, std::size_t cap) {
  if (cap < 1) throw std::invalid_argument("char vocab cap must be >= 1");
  std::map<std::uint32_t, long long> freq;
  for (const auto& s : targetSentences)
    for (std::uint32_t cp : utf8_decode(s)) {
      if (cp == U' ') continue;  // whitespace is the reserved w-space symbol
      ++freq[cp];
    }
  if (freq.empty()) throw std::invalid_argument("empty corpus: no characters to count");

  std::vector<std::pair<std::uint32_t, long long>> order(freq.begin(), freq.end());
  // Most frequent first; ties by ascending code point.
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (order.size() > cap) order.resize(cap);

  std::vector<std::uint32_t> kept;
  for (const auto& [cp, n] : order) kept.push_back(cp);
  std::sort(kept.begin(), kept.end());  // stable id assignment independent of counts
  return CharVocab(std::move(kept));
}

// ---------------------------------------------------------------------------
// BPE

namespace {

constexpr const char* kEow = "</w>";

std::vector<std::string> word_symbols(const std::string& word) {
  std::vector<std::string> syms;
  for (std::uint32_t cp : utf8_decode(word)) syms.push_back(utf8_encode(cp));
  syms.push_back(kEow);
  return syms;
}

void apply_merge(std::vector<std::string>& syms, const std::pair<std::string, std::string>& m) {
  std::size_t w = 0;
  for (std::size_t r = 0; r < syms.size();) {
    if (r + 1 < syms.size() && syms[r] == m.first && syms[r + 1] == m.second) {
      syms[w++] = m.first + m.second;
      r += 2;
    } else {
      if (w != r) syms[w] = std::move(syms[r]);
      ++w;
      ++r;
    }
  }
  syms.resize(w);
}

}  // namespace

BpeModel learn_bpe(const std::vector<std::string>& sentences, std::size_t numMerges) {
  std::map<std::string, long long> wordFreq;
  for (const auto& s : sentences)
    for (const auto& w : split_ws(s)) ++wordFreq[w];
  if (wordFreq.empty()) throw std::invalid_argument("empty corpus: nothing to learn BPE from");

  std::vector<std::pair<std::vector<std::string>, long long>> words;
  words.reserve(wordFreq.size());
  for (const auto& [w, f] : wordFreq) words.emplace_back(word_symbols(w), f);

  BpeModel model;
  for (std::size_t step = 0; step < numMerges; ++step) {
    std::map<std::pair<std::string, std::string>, long long> pairs;
    for (const auto& [syms, f] : words)
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) pairs[{syms[i], syms[i + 1]}] += f;
    if (pairs.empty()) break;
    // Most frequent pair; ties resolved by the lexicographically smallest
    // pair (std::map iteration order makes the first max the smallest).
    auto best = pairs.begin();
    for (auto it = pairs.begin(); it != pairs.end(); ++it)
      if (it->second > best->second) best = it;
    model.merges.push_back(best->first);
    for (auto& [syms, f] : words) apply_merge(syms, best->first);
  }
  return model;
}

std::vector<std::string> BpeModel::apply_word(const std::string& word) const {
  std::vector<std::string> syms = word_symbols(word);
  for (const auto& m : merges) apply_merge(syms, m);
  return syms;
}

std::vector<std::string> BpeModel::apply(const std::string& sentence) const {
  std::vector<std::string> units;
  for (const auto& w : split_ws(sentence))
    for (auto& u : apply_word(w)) units.push_back(std::move(u));
  return units;
}

void BpeModel::save(const std::string& path) const {
  std::vector<std::string> lines;
  for (const auto& [l, r] : merges) lines.push_back(l + " " + r);
  write_lines(path, lines);
}

BpeModel BpeModel::load(const std::string& path) {
  BpeModel model;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size())
      throw std::runtime_error("malformed BPE merge line in " + path + ": '" + line + "'");
    model.merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  return model;
}

// ---------------------------------------------------------------------------
// SubwordVocab

SubwordVocab::SubwordVocab(std::vector<std::string> units) : units_(std::move(units)) {
  for (std::size_t i = 0; i < units_.size(); ++i)
    toId_[units_[i]] = static_cast<int>(kReserved + i);
}

int SubwordVocab::id_of(const std::string& unit) const {
  auto it = toId_.find(unit);
  return it == toId_.end() ? kUnk : it->second;
}

std::string SubwordVocab::symbol(int id) const {
  if (id == kUnk) return "<unk-src>";
  const std::size_t k = static_cast<std::size_t>(id) - kReserved;
  if (k >= units_.size()) throw std::out_of_range("source unit id " + std::to_string(id));
  return units_[k];
}

std::vector<int> SubwordVocab::encode(const std::vector<std::string>& units) const {
  std::vector<int> ids;
  ids.reserve(units.size());
  for (const auto& u : units) ids.push_back(id_of(u));
  return ids;
}

void SubwordVocab::save(const std::string& path) const {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < size(); ++i) lines.push_back(symbol(static_cast<int>(i)));
  write_lines(path, lines);
}

SubwordVocab SubwordVocab::load(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "<unk-src>")
    throw std::runtime_error("malformed source vocab file: " + path);
  lines.erase(lines.begin());
  return SubwordVocab(std::move(lines));
}

std::uint64_t SubwordVocab::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < size(); ++i) h = fnv1a(symbol(static_cast<int>(i)) + "\n", h);
  return h;
}

SubwordVocab build_source_vocab(const std::vector<std::string>& sentences, const BpeModel& bpe) {
  std::map<std::string, long long> freq;
  for (const auto& s : sentences)
    for (const auto& u : bpe.apply(s)) ++freq[u];
  std::vector<std::pair<std::string, long long>> order(freq.begin(), freq.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> units;
  units.reserve(order.size());
  for (auto& [u, n] : order) units.push_back(std::move(u));
  return SubwordVocab(std::move(units));
}

EncodedExample encode_example(const std::string& src, const std::string& trg, const BpeModel& bpe,
                              const CharVocab& cv, const SubwordVocab& sv) {
  EncodedExample ex;
  ex.source = sv.encode(bpe.apply(src));
  ex.target = cv.encode(trg);
  return ex;
}

}  // namespace mornmt
