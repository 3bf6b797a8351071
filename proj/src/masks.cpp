#include "gdseg/masks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace gdseg {

double gaussian_weight(double dis, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("gaussian_weight: sigma must be positive");
  if (dis < 0.0) throw std::invalid_argument("gaussian_weight: distance must be nonnegative");
  // erfc underflows to 0 around dis/sigma > 37; keep the weight in (0,1]
  // so a kept entry is never silently identical to a dropped one.
  return std::max(std::erfc(dis / (sigma * std::sqrt(2.0))),
                  std::numeric_limits<double>::min());
}

GaussianMaskSet build_masks(int n, double sigma, int pad_count) {
  if (n < 1) throw std::invalid_argument("build_masks: n must be >= 1");
  if (pad_count < 0 || pad_count >= n)
    throw std::invalid_argument("build_masks: pad_count must be in [0, n)");
  GaussianMaskSet m;
  m.length = n;
  m.sigma = sigma;
  m.pad_count = pad_count;
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  m.g.resize(nn);
  m.keep_f.resize(nn);
  m.keep_b.resize(nn);
  m.pad_keep.resize(nn);
  const int real = n - pad_count;
  // g depends only on |i-j|; precompute one row of distances.
  std::vector<double> by_dist(n);
  for (int d = 0; d < n; ++d) by_dist[d] = gaussian_weight(d, sigma);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * n + j;
      m.g[idx] = by_dist[i > j ? i - j : j - i];
      m.keep_f[idx] = j <= i;
      m.keep_b[idx] = i <= j;
      m.pad_keep[idx] = i < real && j < real;
    }
  }
  return m;
}

std::vector<uint8_t> GaussianMaskSet::effective_keep(Direction dir) const {
  const int n = length;
  std::vector<uint8_t> keep(static_cast<std::size_t>(n) * n, 0);
  const std::vector<uint8_t>* d = nullptr;
  if (dir == Direction::forward) d = &keep_f;
  else if (dir == Direction::backward) d = &keep_b;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * n + j;
      keep[idx] = pad_keep[idx] && (!d || (*d)[idx]);
    }
  // Pad queries attend to themselves only; their rows never reach the loss.
  const int real = n - pad_count;
  for (int i = real; i < n; ++i)
    keep[static_cast<std::size_t>(i) * n + i] = 1;
  return keep;
}

struct MaskCache::Impl {
  std::mutex mu;
  std::map<std::tuple<int, double, int>, GaussianMaskSet> entries;
};

std::shared_ptr<MaskCache::Impl> MaskCache::make_impl() {
  return std::make_shared<Impl>();
}

const GaussianMaskSet& MaskCache::get(int n, double sigma, int pad_count) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  auto key = std::make_tuple(n, sigma, pad_count);
  auto it = impl_->entries.find(key);
  if (it == impl_->entries.end())
    it = impl_->entries.emplace(key, build_masks(n, sigma, pad_count)).first;
  return it->second;
}

}  // namespace gdseg
