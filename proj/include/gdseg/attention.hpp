#pragma once

#include "gdseg/masks.hpp"
#include "gdseg/tensor.hpp"

namespace gdseg {

// Per-head projections plus the output projection of the multi-head wrapper.
struct AttentionParams {
  std::vector<Tensor> wq, wk, wv;  // h matrices, each d_model x d_head
  Tensor wm;                       // d_model x d_model
  int heads = 0;
  int d_model = 0;

  int d_head() const { return d_model / heads; }
};

struct AttentionOptions {
  bool use_gaussian = true;      // off: G == 1 (plain scaled dot product)
  bool use_directional = true;   // off: every direction behaves like center
  bool scale_by_head_dim = false;  // divide by sqrt(d_head) instead of sqrt(d_model)
};

// Gaussian-masked directional attention on already-projected inputs.
// Raw scores QK^T are Hadamard-multiplied by G, scaled, directionally
// masked, then soft-maxed; dropped entries get exactly zero weight.
Tensor ag_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                    const GaussianMaskSet& masks, Direction dir,
                    const AttentionOptions& opts, int scale_dim);

// Multi-head self-attention: per-head projections, ag_attention per head,
// concat, output projection.
Tensor gd_multi_head(const Tensor& x, const AttentionParams& params,
                     const GaussianMaskSet& masks, Direction dir,
                     const AttentionOptions& opts);

}  // namespace gdseg
