#pragma once

#include "gdseg/corpus.hpp"
#include "gdseg/encoder.hpp"

namespace gdseg {

struct BatchLoss {
  Tensor total;
  double main_value = 0.0;
  double aux_value = 0.0;
  bool empty_gap_warning = false;  // batch contained single-character rows only
};

// The segmenter: config plus parameters plus a shared mask cache.
struct SegModel {
  EncoderConfig cfg;
  ModelParams params;
  MaskCache masks;

  static SegModel create(const EncoderConfig& cfg, int vocab_size, std::uint64_t seed);

  // Mean over sentences of per-sentence CE; aux head added when
  // use_highway_o is on and train is set.
  BatchLoss batch_loss(const Batch& batch, std::mt19937_64& rng, bool train);

  // Main-head greedy boundary prediction for one sentence (no dropout).
  GapLabelVector predict(const std::vector<int>& char_ids);
  Segmentation segment_ids(const std::vector<int>& char_ids);
};

}  // namespace gdseg
