#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mornmt {

// UTF-8 <-> code point helpers. Invalid bytes decode as U+FFFD.
std::vector<std::uint32_t> utf8_decode(const std::string& s);
std::string utf8_encode(std::uint32_t cp);
std::string utf8_encode(const std::vector<std::uint32_t>& cps);

std::vector<std::string> split_ws(const std::string& s);

// Aligned sentence pairs, one sentence per line in the backing files.
// Pairs where either side is empty are dropped at load time.
struct ParallelCorpus {
  std::vector<std::string> src;
  std::vector<std::string> trg;
  std::size_t size() const { return src.size(); }
};

ParallelCorpus load_parallel(const std::string& srcPath, const std::string& trgPath);
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

// Target-side character inventory: reserved symbols plus the `cap` most
// frequent code points; everything else maps to the unknown character.
// Whitespace is a first-class symbol so the decoder can emit it.
class CharVocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kSpace = 3;
  static constexpr std::size_t kReserved = 4;

  CharVocab() = default;
  explicit CharVocab(std::vector<std::uint32_t> kept);

  std::size_t size() const { return kReserved + kept_.size(); }
  int id_of(std::uint32_t cp) const;
  // Symbol names as written to vocab files; reserved ids use bracketed names.
  std::string symbol(int id) const;

  std::vector<int> encode(const std::string& sentence) const;  // BOS ... EOS
  std::string decode(const std::vector<int>& ids) const;

  void save(const std::string& path) const;
  static CharVocab load(const std::string& path);

  std::uint64_t hash() const;

 private:
  std::vector<std::uint32_t> kept_;
  std::unordered_map<std::uint32_t, int> toId_;
};

CharVocab build_char_vocab(const std::vector<std::string>& targetSentences, std::size_t cap);

// Ordered byte-pair merge rules learned from the source side.
struct BpeModel {
  std::vector<std::pair<std::string, std::string>> merges;

  std::vector<std::string> apply_word(const std::string& word) const;
  std::vector<std::string> apply(const std::string& sentence) const;

  void save(const std::string& path) const;
  static BpeModel load(const std::string& path);
};

BpeModel learn_bpe(const std::vector<std::string>& sentences, std::size_t numMerges);

// Source-side subword unit inventory after BPE application.
class SubwordVocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr std::size_t kReserved = 1;

  SubwordVocab() = default;
  explicit SubwordVocab(std::vector<std::string> units);

  std::size_t size() const { return kReserved + units_.size(); }
  int id_of(const std::string& unit) const;
  std::string symbol(int id) const;
  std::vector<int> encode(const std::vector<std::string>& units) const;

  void save(const std::string& path) const;
  static SubwordVocab load(const std::string& path);

  std::uint64_t hash() const;

 private:
  std::vector<std::string> units_;
  std::unordered_map<std::string, int> toId_;
};

SubwordVocab build_source_vocab(const std::vector<std::string>& sentences, const BpeModel& bpe);

struct EncodedExample {
  std::vector<int> source;  // bpe-unit ids
  std::vector<int> target;  // BOS ... EOS character ids
};

EncodedExample encode_example(const std::string& src, const std::string& trg, const BpeModel& bpe,
                              const CharVocab& cv, const SubwordVocab& sv);

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 14695981039346656037ULL);

}  // namespace mornmt
