#pragma once

#include <string>
#include <vector>

#include "gdseg/corpus.hpp"
#include "gdseg/decoder.hpp"

namespace gdseg {

struct EvalReport {
  long long true_positive = 0;
  long long predicted = 0;
  long long gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  std::string to_table() const;
  std::string to_kv() const;  // machine-readable key=value lines
};

// Word-level span F1: a predicted word counts iff its exact (start,end)
// appears in the gold segmentation of the same sentence.
EvalReport word_f1(const std::vector<Segmentation>& pred,
                   const std::vector<Segmentation>& gold);

// Left-to-right greedy longest-prefix dictionary segmentation.
Segmentation max_match_segment(const std::vector<char32_t>& chars,
                               const std::vector<std::vector<char32_t>>& lexicon);

}  // namespace gdseg
