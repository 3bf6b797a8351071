#pragma once

#include <utility>
#include <vector>

#include "gdseg/tensor.hpp"

namespace gdseg {

// Contiguous non-overlapping half-open character spans covering [0, n).
using Segmentation = std::vector<std::pair<int, int>>;

// Per-gap boundary labels, length n-1; 1 = word boundary after the gap's
// left character.
using GapLabelVector = std::vector<int>;

// Per-gap argmax; ties resolve to no boundary.
GapLabelVector greedy_decode(const Tensor& scores);

Segmentation labels_to_segmentation(int n, const GapLabelVector& labels);

GapLabelVector segmentation_to_labels(const Segmentation& seg);

}  // namespace gdseg
