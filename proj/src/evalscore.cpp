#include "gdseg/evalscore.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

namespace gdseg {

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << "words: gold=" << gold << " predicted=" << predicted
     << " matched=" << true_positive << "\n";
  os << "P=" << precision << " R=" << recall << " F1=" << f1 << "\n";
  return os.str();
}

std::string EvalReport::to_kv() const {
  std::ostringstream os;
  os << "P=" << precision << "\nR=" << recall << "\nF1=" << f1 << "\nTP="
     << true_positive << "\npred=" << predicted << "\ngold=" << gold << "\n";
  return os.str();
}

EvalReport word_f1(const std::vector<Segmentation>& pred,
                   const std::vector<Segmentation>& gold) {
  if (pred.size() != gold.size())
    throw std::invalid_argument("word_f1: sentence count mismatch");
  EvalReport r;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    if (!pred[s].empty() && !gold[s].empty() &&
        pred[s].back().second != gold[s].back().second)
      throw std::invalid_argument("word_f1: sentence length mismatch at index " +
                                  std::to_string(s));
    std::set<std::pair<int, int>> gold_spans(gold[s].begin(), gold[s].end());
    for (const auto& span : pred[s])
      if (gold_spans.count(span)) ++r.true_positive;
    r.predicted += static_cast<long long>(pred[s].size());
    r.gold += static_cast<long long>(gold[s].size());
  }
  r.precision = r.predicted ? static_cast<double>(r.true_positive) / r.predicted : 0.0;
  r.recall = r.gold ? static_cast<double>(r.true_positive) / r.gold : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

Segmentation max_match_segment(const std::vector<char32_t>& chars,
                               const std::vector<std::vector<char32_t>>& lexicon) {
  if (lexicon.empty()) throw std::invalid_argument("max_match: empty lexicon");
  std::set<std::vector<char32_t>> dict(lexicon.begin(), lexicon.end());
  std::size_t max_len = 0;
  for (const auto& w : dict) max_len = std::max(max_len, w.size());

  Segmentation seg;
  std::size_t pos = 0;
  while (pos < chars.size()) {
    std::size_t best = 1;  // unmatched leading character is its own word
    const std::size_t limit = std::min(max_len, chars.size() - pos);
    for (std::size_t len = limit; len >= 2; --len) {
      std::vector<char32_t> cand(chars.begin() + pos, chars.begin() + pos + len);
      if (dict.count(cand)) {
        best = len;
        break;
      }
    }
    seg.emplace_back(static_cast<int>(pos), static_cast<int>(pos + best));
    pos += best;
  }
  return seg;
}

}  // namespace gdseg
