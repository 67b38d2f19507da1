#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace mornmt {

struct Segmentation {
  std::string word;
  std::vector<std::string> morphs;
  std::size_t stemIndex = 0;  // leftmost longest morph

  const std::string& stem() const { return morphs[stemIndex]; }
  bool round_trips() const;
};

// Picks the leftmost longest morph as the stem.
std::size_t stem_index(const std::vector<std::string>& morphs);

struct MdlConfig {
  double perMorphCost = 4.0;   // lexicon cost per entry
  double charCost = 2.0;       // lexicon cost per code point
  double corpusWeight = 0.5;   // scales the corpus term against the lexicon
  int maxPasses = 8;
};

// Greedy recursive minimum-description-length segmentation over word types.
// Total cost = corpus cost (-sum freq*log p(morph)) + lexicon cost
// (perMorphCost per distinct morph + charCost per lexicon code point).
// A chunk is split at the position that lowers the total cost the most and
// the halves are segmented recursively; otherwise it is kept whole. Passes
// repeat until no word changes. Cost never increases across accepted
// updates; segment_corpus throws if that invariant is violated.
std::map<std::string, Segmentation> segment_corpus(
    const std::map<std::string, long long>& wordFreq, const MdlConfig& cfg = {});

std::map<std::string, long long> count_words(const std::vector<std::string>& sentences);

// Independent (from-scratch) MDL cost of a full corpus segmentation; test
// oracle and debugging aid.
double mdl_corpus_cost(const std::map<std::string, long long>& wordFreq,
                       const std::map<std::string, Segmentation>& segs, const MdlConfig& cfg);

struct AffixInventory {
  std::map<std::string, long long> prefixes;  // affix -> corpus frequency
  std::map<std::string, long long> suffixes;

  bool empty() const { return prefixes.empty() && suffixes.empty(); }
  std::size_t affix_type_count() const;
  // Distinct affix strings with combined prefix+suffix frequency.
  std::map<std::string, long long> combined() const;

  void save(const std::string& path) const;
  static AffixInventory load(const std::string& path);
};

AffixInventory extract_affixes(const std::map<std::string, Segmentation>& segs,
                               const std::map<std::string, long long>& wordFreq,
                               long long minCount);

// Morphological class labels: specials first, then one class per kept affix
// ordered by descending frequency, ties lexicographic.
class LabelSet {
 public:
  static constexpr int kBos = 0;
  static constexpr int kSpace = 1;
  static constexpr int kStem = 2;
  static constexpr int kUnk = 3;
  static constexpr int kEos = 4;
  static constexpr std::size_t kReserved = 5;

  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> affixes);

  std::size_t size() const { return kReserved + affixes_.size(); }
  const std::string& name(int id) const;
  int affix_label(const std::string& affix) const;  // kUnk when not kept

  void save(const std::string& path) const;
  static LabelSet load(const std::string& path);

  std::uint64_t hash() const;

 private:
  std::vector<std::string> affixes_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> toId_;
};

LabelSet build_label_vocab(const AffixInventory& inventory);

// Per-character class labels aligned with CharVocab::encode output:
// position 0 is BOS, spaces are w-space, the final position is EOS-C.
// Words without a segmentation fall back to whole-word-as-stem.
std::vector<int> label_characters(const std::string& sentence,
                                  const std::map<std::string, Segmentation>& segs,
                                  const LabelSet& labels);

void save_segmentations(const std::string& path, const std::map<std::string, Segmentation>& segs);
std::map<std::string, Segmentation> load_segmentations(const std::string& path);

}  // namespace mornmt
