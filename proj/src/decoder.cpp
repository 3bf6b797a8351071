#include "gdseg/decoder.hpp"

#include <stdexcept>

namespace gdseg {

GapLabelVector greedy_decode(const Tensor& scores) {
  GapLabelVector labels;
  if (!scores.defined()) return labels;
  const int l = scores.rows();
  labels.reserve(l);
  for (int i = 0; i < l; ++i)
    labels.push_back(scores.at(i, 1) > scores.at(i, 0) ? 1 : 0);
  return labels;
}

Segmentation labels_to_segmentation(int n, const GapLabelVector& labels) {
  if (n < 1) throw std::invalid_argument("labels_to_segmentation: n must be >= 1");
  if (static_cast<int>(labels.size()) != n - 1)
    throw std::invalid_argument("labels_to_segmentation: label length mismatch");
  Segmentation seg;
  int start = 0;
  for (int i = 0; i + 1 < n; ++i) {
    if (labels[i] == 1) {
      seg.emplace_back(start, i + 1);
      start = i + 1;
    }
  }
  seg.emplace_back(start, n);
  return seg;
}

GapLabelVector segmentation_to_labels(const Segmentation& seg) {
  if (seg.empty()) throw std::invalid_argument("segmentation_to_labels: empty segmentation");
  int expect = 0;
  for (const auto& [s, e] : seg) {
    if (s != expect || e <= s)
      throw std::invalid_argument("segmentation_to_labels: invalid spans");
    expect = e;
  }
  const int n = seg.back().second;
  GapLabelVector labels(n - 1, 0);
  for (std::size_t w = 0; w + 1 < seg.size(); ++w) labels[seg[w].second - 1] = 1;
  return labels;
}

}  // namespace gdseg
