#include "gdseg/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace gdseg {

Tensor ag_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                    const GaussianMaskSet& masks, Direction dir,
                    const AttentionOptions& opts, int scale_dim) {
  const int n = q.rows();
  if (k.shape != q.shape || v.shape != q.shape)
    throw std::invalid_argument("ag_attention: Q/K/V shape mismatch");
  if (masks.length != n)
    throw std::invalid_argument("ag_attention: mask length mismatch");

  Tensor scores = matmul(q, transpose(k));
  if (opts.use_gaussian) {
    Tensor g = Tensor::from_values({n, n}, masks.g);  // constant, no grad
    scores = mul(scores, g);
  }
  scores = scale(scores, 1.0 / std::sqrt(static_cast<double>(scale_dim)));
  const Direction eff = opts.use_directional ? dir : Direction::center;
  Tensor weights = masked_softmax(scores, masks.effective_keep(eff));
  return matmul(weights, v);
}

Tensor gd_multi_head(const Tensor& x, const AttentionParams& params,
                     const GaussianMaskSet& masks, Direction dir,
                     const AttentionOptions& opts) {
  if (params.heads < 1 || params.d_model % params.heads != 0)
    throw std::invalid_argument("gd_multi_head: d_model not divisible by heads");
  if (x.cols() != params.d_model)
    throw std::invalid_argument("gd_multi_head: input width mismatch");
  const int scale_dim = opts.scale_by_head_dim ? params.d_head() : params.d_model;
  std::vector<Tensor> heads;
  heads.reserve(params.heads);
  for (int h = 0; h < params.heads; ++h) {
    Tensor qh = matmul(x, params.wq[h]);
    Tensor kh = matmul(x, params.wk[h]);
    Tensor vh = matmul(x, params.wv[h]);
    heads.push_back(ag_attention(qh, kh, vh, masks, dir, opts, scale_dim));
  }
  return matmul(concat_cols(heads), params.wm);
}

}  // namespace gdseg
