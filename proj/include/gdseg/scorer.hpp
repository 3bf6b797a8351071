#pragma once

#include "gdseg/tensor.hpp"

namespace gdseg {

inline constexpr int kNumGapLabels = 2;  // 0 = no boundary, 1 = boundary

// Bilinear form plus linear map on the concatenation plus bias.
struct BiaffineParams {
  std::vector<Tensor> w;  // one d x d matrix per label
  Tensor u;               // 2 x 2d
  Tensor b;               // 2
  int d = 0;
};

// Scores one gap from the forward vector of the left character and the
// backward vector of the right character. Returns a 1 x 2 tensor.
Tensor biaffine_score(const Tensor& vf_i, const Tensor& vb_j,
                      const BiaffineParams& params);

// Scores every gap of a sentence: row g pairs v_f[g] with v_b[g+1].
// n == 1 yields an empty 0-gap result (undefined tensor).
Tensor score_gaps(const Tensor& v_f, const Tensor& v_b,
                  const BiaffineParams& params);

// Per-sentence cross entropy over non-masked gaps, normalized by their
// count. valid[i] == 0 excludes gap i (pad gaps). Zero valid gaps
// contribute a zero scalar and set *warned if provided.
Tensor ce_loss(const Tensor& scores, const std::vector<int>& gold,
               const std::vector<uint8_t>& valid, bool* warned = nullptr);

Tensor total_loss(const Tensor& main_loss, const Tensor& aux_loss,
                  bool use_highway_o);

}  // namespace gdseg
