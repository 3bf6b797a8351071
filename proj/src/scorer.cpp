#include "gdseg/scorer.hpp"

#include <cmath>
#include <stdexcept>

namespace gdseg {

namespace {

// Bilinear columns for a block of gaps: column j holds (Vf W_j) . Vb rowwise.
Tensor bilinear_cols(const Tensor& vf, const Tensor& vb,
                     const BiaffineParams& params) {
  std::vector<Tensor> cols;
  cols.reserve(kNumGapLabels);
  for (int j = 0; j < kNumGapLabels; ++j)
    cols.push_back(row_sum(mul(matmul(vf, params.w[j]), vb)));
  return concat_cols(cols);
}

}  // namespace

Tensor biaffine_score(const Tensor& vf_i, const Tensor& vb_j,
                      const BiaffineParams& params) {
  if (vf_i.cols() != params.d || vb_j.cols() != params.d || vf_i.rows() != 1 ||
      vb_j.rows() != 1)
    throw std::invalid_argument("biaffine_score: dimension mismatch");
  Tensor bil = bilinear_cols(vf_i, vb_j, params);
  Tensor lin = matmul(concat_cols({vf_i, vb_j}), transpose(params.u));
  return add_row_bias(add(bil, lin), params.b);
}

Tensor score_gaps(const Tensor& v_f, const Tensor& v_b,
                  const BiaffineParams& params) {
  const int n = v_f.rows();
  if (v_b.rows() != n || v_f.cols() != params.d || v_b.cols() != params.d)
    throw std::invalid_argument("score_gaps: shape mismatch");
  if (n == 1) return Tensor();  // no gaps
  Tensor vf_gap = slice_rows(v_f, 0, n - 1);
  Tensor vb_gap = slice_rows(v_b, 1, n);
  Tensor bil = bilinear_cols(vf_gap, vb_gap, params);
  Tensor lin = matmul(concat_cols({vf_gap, vb_gap}), transpose(params.u));
  return add_row_bias(add(bil, lin), params.b);
}

Tensor ce_loss(const Tensor& scores, const std::vector<int>& gold,
               const std::vector<uint8_t>& valid, bool* warned) {
  const int l = scores.defined() ? scores.rows() : 0;
  if (static_cast<int>(gold.size()) != l || static_cast<int>(valid.size()) != l)
    throw std::invalid_argument("ce_loss: label/mask length mismatch");
  int l_eff = 0;
  for (uint8_t v : valid) l_eff += v ? 1 : 0;
  if (l_eff == 0) {
    if (warned) *warned = true;
    return Tensor::scalar(0.0);
  }
  for (int p : gold)
    if (p != 0 && p != 1) throw std::invalid_argument("ce_loss: labels must be 0/1");

  double total = 0.0;
  for (int i = 0; i < l; ++i) {
    if (!valid[i]) continue;
    const double s0 = scores.at(i, 0), s1 = scores.at(i, 1);
    const double m = std::max(s0, s1);
    const double lse = m + std::log(std::exp(s0 - m) + std::exp(s1 - m));
    total += -scores.at(i, gold[i]) + lse;
  }
  total /= l_eff;

  return make_op_result(
      {1}, {total}, {scores}, [gold, valid, l, l_eff](const Tensor& o) {
        Tensor p = o.node->parents[0];
        if (!(p.requires_grad || p.node)) return;
        std::vector<double>& g = p.grad_values();
        const double go = (*o.grad)[0];
        for (int i = 0; i < l; ++i) {
          if (!valid[i]) continue;
          const double s0 = p.at(i, 0), s1 = p.at(i, 1);
          const double m = std::max(s0, s1);
          const double e0 = std::exp(s0 - m), e1 = std::exp(s1 - m);
          const double z = e0 + e1;
          const double p1 = e1 / z;
          g[static_cast<std::size_t>(i) * 2 + 0] +=
              go * ((1.0 - p1) - (gold[i] == 0 ? 1.0 : 0.0)) / l_eff;
          g[static_cast<std::size_t>(i) * 2 + 1] +=
              go * (p1 - (gold[i] == 1 ? 1.0 : 0.0)) / l_eff;
        }
      });
}

Tensor total_loss(const Tensor& main_loss, const Tensor& aux_loss,
                  bool use_highway_o) {
  if (!use_highway_o) return main_loss;
  return add(main_loss, aux_loss);
}

}  // namespace gdseg
