#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "gdseg/decoder.hpp"

namespace gdseg {

// UTF-8 helpers. Strict decoding; invalid bytes throw std::invalid_argument.
std::vector<char32_t> utf8_decode(const std::string& s);
std::string utf8_encode(const std::vector<char32_t>& cps);

// A sentence as raw codepoints plus its gold word spans.
struct CharSequence {
  std::vector<char32_t> chars;
  Segmentation gold;

  GapLabelVector gold_labels() const { return segmentation_to_labels(gold); }
};

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;

class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary build(const std::vector<CharSequence>& train, int min_count = 1);

  int lookup(char32_t cp) const;  // UNK for unseen codepoints
  int size() const { return static_cast<int>(chars_.size()) + 2; }
  std::uint64_t hash() const;

  void save(const std::string& path, int min_count = 1) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<char32_t> chars_;  // id = index + 2
  std::unordered_map<char32_t, int> ids_;
};

struct Batch {
  std::vector<std::vector<int>> ids;        // padded to n_max with kPadId
  std::vector<int> lengths;                 // true lengths
  std::vector<GapLabelVector> gold;         // per sentence, length len-1
  std::vector<std::vector<uint8_t>> valid;  // per-gap non-pad mask, length n_max-1
  int n_max = 0;
};

// One sentence per line, words separated by runs of spaces/tabs, empty
// lines skipped. Throws with the line number on invalid UTF-8.
std::vector<CharSequence> parse_corpus(std::istream& in);
std::vector<CharSequence> parse_corpus_file(const std::string& path);

// Sorted-by-length greedy fill up to budget true tokens per batch; an
// over-long sentence gets a singleton batch. Batch order shuffled by seed.
std::vector<Batch> batch_by_tokens(const std::vector<CharSequence>& sentences,
                                   const Vocabulary& vocab, int budget,
                                   std::uint64_t shuffle_seed);

}  // namespace gdseg
