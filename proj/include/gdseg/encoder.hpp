#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>

#include "gdseg/attention.hpp"
#include "gdseg/masks.hpp"
#include "gdseg/scorer.hpp"
#include "gdseg/tensor.hpp"

namespace gdseg {

struct EncoderConfig {
  int d_model = 256;
  int n_layers = 6;
  int d_ff = 1024;
  int heads = 4;
  double dropout = 0.1;
  double sigma = 2.0;
  int hired_after = 0;  // 0: pick n_layers / 2
  bool use_gaussian_mask = true;
  bool use_directional_mask = true;
  bool use_highway_i = true;
  bool use_highway_o = true;
  bool enable_forward = true;
  bool enable_center = true;
  bool enable_backward = true;
  bool use_word_sum = false;
  bool use_positional_encoding = false;
  bool scale_by_head_dim = false;

  int effective_hired_after() const { return hired_after > 0 ? hired_after : n_layers / 2; }
  void validate() const;
  AttentionOptions attention_options() const;
};

struct LayerParams {
  AttentionParams attn;
  Tensor ff_w1, ff_b1, ff_w2, ff_b2;
  Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};

struct PipelineParams {
  std::vector<LayerParams> front;
  std::vector<LayerParams> rear;
};

struct ModelParams {
  Tensor embedding;  // vocab x d_model; row 0 PAD, row 1 UNK
  std::optional<PipelineParams> forward_pipe, center_pipe, backward_pipe;
  BiaffineParams main_scorer;
  std::optional<BiaffineParams> aux_scorer;

  static ModelParams init(const EncoderConfig& cfg, int vocab_size,
                          std::mt19937_64& rng);

  void for_each_param(const std::function<void(const std::string&, Tensor&)>& fn);
  std::vector<std::pair<std::string, Tensor>> named_params();
  std::size_t param_count();
};

Tensor embed(const std::vector<int>& char_ids, const ModelParams& params,
             const EncoderConfig& cfg);

Tensor encoder_layer(const Tensor& x, const LayerParams& layer,
                     const GaussianMaskSet& masks, Direction dir,
                     const EncoderConfig& cfg, std::mt19937_64& rng, bool train);

struct EncodeResult {
  Tensor v_f, v_b;          // main fused representations
  Tensor v_f_aux, v_b_aux;  // HiRED outputs (defined when computed)
  Tensor r_f, r_c, r_b;     // per-pipeline rear outputs (instrumentation)
};

// Runs the three directional pipelines around the HiRED split.
// true_len < n marks trailing pad rows (word-sum and aux decode ignore them).
EncodeResult encode(const Tensor& e, const ModelParams& params,
                    const EncoderConfig& cfg, const GaussianMaskSet& masks,
                    std::mt19937_64& rng, bool train, int true_len);

}  // namespace gdseg
