#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace gdseg {

enum class Direction { forward, backward, center };

// Precomputed Gaussian weights and directional/pad keep patterns for one
// padded sequence length. Immutable after construction.
struct GaussianMaskSet {
  int length = 0;
  double sigma = 0.0;
  int pad_count = 0;
  std::vector<double> g;         // n*n multiplicative weights in (0,1]
  std::vector<uint8_t> keep_f;   // lower triangular incl. diagonal
  std::vector<uint8_t> keep_b;   // upper triangular incl. diagonal
  std::vector<uint8_t> pad_keep; // false on pad rows and columns

  // Direction keep intersected with pad_keep; pad rows keep only the
  // diagonal so attention never sees an empty row.
  std::vector<uint8_t> effective_keep(Direction dir) const;
};

// Distance-decaying attention weight: the tail mass of a centered Gaussian
// with deviation sigma beyond -dis, normalized so weight(0) == 1.
// Closed form erfc(dis / (sigma * sqrt(2))).
double gaussian_weight(double dis, double sigma);

GaussianMaskSet build_masks(int n, double sigma, int pad_count = 0);

// Cache keyed by (n, sigma, pad_count). Thread-safe.
class MaskCache {
 public:
  const GaussianMaskSet& get(int n, double sigma, int pad_count);

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_ = make_impl();
  static std::shared_ptr<Impl> make_impl();
};

}  // namespace gdseg
