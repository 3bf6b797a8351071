#include "gdseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace gdseg {

namespace {

std::size_t shape_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int e : shape) {
    if (e <= 0) throw std::invalid_argument("tensor extent must be positive");
    n *= static_cast<std::size_t>(e);
  }
  return n;
}

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace

Tensor::Tensor(std::vector<int> s, double fill, bool rg) {
  shape = std::move(s);
  data = std::make_shared<std::vector<double>>(shape_count(shape), fill);
  requires_grad = rg;
  // Allocate eagerly: copies share the buffer, so gradients written through
  // one copy are visible through all of them.
  if (rg) grad_values();
}

Tensor Tensor::from_values(std::vector<int> s, std::vector<double> v, bool rg) {
  Tensor t;
  t.shape = std::move(s);
  if (shape_count(t.shape) != v.size())
    throw std::invalid_argument("value count does not match shape");
  t.data = std::make_shared<std::vector<double>>(std::move(v));
  t.requires_grad = rg;
  if (rg) t.grad_values();
  return t;
}

Tensor Tensor::scalar(double v) { return from_values({1}, {v}); }

int Tensor::rows() const {
  require(shape.size() == 2, "expected 2-d tensor");
  return shape[0];
}

int Tensor::cols() const {
  require(shape.size() == 2, "expected 2-d tensor");
  return shape[1];
}

double& Tensor::at(int i, int j) {
  return (*data)[static_cast<std::size_t>(i) * shape[1] + j];
}

double Tensor::at(int i, int j) const {
  return (*data)[static_cast<std::size_t>(i) * shape[1] + j];
}

double Tensor::item() const {
  require(size() == 1, "item() needs a scalar tensor");
  return (*data)[0];
}

std::vector<double>& Tensor::grad_values() {
  if (!grad) grad = std::make_shared<std::vector<double>>(data->size(), 0.0);
  return *grad;
}

void Tensor::zero_grad() {
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
}

namespace {

// Attaches a node when any parent participates in the tape.
Tensor make_result(std::vector<int> shape, std::vector<double> values,
                   std::vector<Tensor> parents,
                   std::function<void(const Tensor&)> bw) {
  Tensor out = Tensor::from_values(std::move(shape), std::move(values));
  bool track = false;
  for (const Tensor& p : parents)
    if (p.requires_grad || p.node) track = true;
  if (track) {
    out.requires_grad = true;
    out.grad_values();
    out.node = std::make_shared<Node>();
    out.node->parents = std::move(parents);
    out.node->backward = std::move(bw);
  }
  return out;
}

void accumulate(Tensor& t, std::size_t idx, double v) {
  if (t.requires_grad || t.node) t.grad_values()[idx] += v;
}

}  // namespace

Tensor make_op_result(std::vector<int> shape, std::vector<double> values,
                      std::vector<Tensor> parents,
                      std::function<void(const Tensor&)> backward_fn) {
  return make_result(std::move(shape), std::move(values), std::move(parents),
                     std::move(backward_fn));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const int n = a.rows(), k = a.cols(), m = b.cols();
  require(b.rows() == k, "matmul: inner extents disagree");
  std::vector<double> out(static_cast<std::size_t>(n) * m, 0.0);
  const double* av = a.data->data();
  const double* bv = b.data->data();
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = av[static_cast<std::size_t>(i) * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv + static_cast<std::size_t>(p) * m;
      double* orow = out.data() + static_cast<std::size_t>(i) * m;
      for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  return make_result(
      {n, m}, std::move(out), {a, b}, [n, k, m](const Tensor& o) {
        Tensor pa = o.node->parents[0];
        Tensor pb = o.node->parents[1];
        const std::vector<double>& go = *o.grad;
        if (pa.requires_grad || pa.node) {
          std::vector<double>& ga = pa.grad_values();
          const double* bv = pb.data->data();
          for (int i = 0; i < n; ++i)
            for (int p = 0; p < k; ++p) {
              double s = 0.0;
              for (int j = 0; j < m; ++j)
                s += go[static_cast<std::size_t>(i) * m + j] *
                     bv[static_cast<std::size_t>(p) * m + j];
              ga[static_cast<std::size_t>(i) * k + p] += s;
            }
        }
        if (pb.requires_grad || pb.node) {
          std::vector<double>& gb = pb.grad_values();
          const double* av = pa.data->data();
          for (int p = 0; p < k; ++p)
            for (int i = 0; i < n; ++i) {
              const double aip = av[static_cast<std::size_t>(i) * k + p];
              if (aip == 0.0) continue;
              for (int j = 0; j < m; ++j)
                gb[static_cast<std::size_t>(p) * m + j] +=
                    aip * go[static_cast<std::size_t>(i) * m + j];
            }
        }
      });
}

Tensor transpose(const Tensor& a) {
  const int n = a.rows(), m = a.cols();
  std::vector<double> out(a.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      out[static_cast<std::size_t>(j) * n + i] = a.at(i, j);
  return make_result({m, n}, std::move(out), {a}, [n, m](const Tensor& o) {
    Tensor p = o.node->parents[0];
    if (!(p.requires_grad || p.node)) return;
    std::vector<double>& gp = p.grad_values();
    const std::vector<double>& go = *o.grad;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i)
        gp[static_cast<std::size_t>(i) * m + j] +=
            go[static_cast<std::size_t>(j) * n + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(same_shape(a, b), "add: shape mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (*a.data)[i] + (*b.data)[i];
  return make_result(a.shape, std::move(out), {a, b}, [](const Tensor& o) {
    for (int side = 0; side < 2; ++side) {
      Tensor p = o.node->parents[side];
      if (!(p.requires_grad || p.node)) continue;
      std::vector<double>& gp = p.grad_values();
      const std::vector<double>& go = *o.grad;
      for (std::size_t i = 0; i < go.size(); ++i) gp[i] += go[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(same_shape(a, b), "mul: shape mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (*a.data)[i] * (*b.data)[i];
  return make_result(a.shape, std::move(out), {a, b}, [](const Tensor& o) {
    Tensor pa = o.node->parents[0];
    Tensor pb = o.node->parents[1];
    const std::vector<double>& go = *o.grad;
    if (pa.requires_grad || pa.node) {
      std::vector<double>& g = pa.grad_values();
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * (*pb.data)[i];
    }
    if (pb.requires_grad || pb.node) {
      std::vector<double>& g = pb.grad_values();
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * (*pa.data)[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*a.data)[i] * c;
  return make_result(a.shape, std::move(out), {a}, [c](const Tensor& o) {
    Tensor p = o.node->parents[0];
    if (!(p.requires_grad || p.node)) return;
    std::vector<double>& g = p.grad_values();
    const std::vector<double>& go = *o.grad;
    for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i] * c;
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (*a.data)[i] > 0.0 ? (*a.data)[i] : 0.0;
  return make_result(a.shape, std::move(out), {a}, [](const Tensor& o) {
    Tensor p = o.node->parents[0];
    if (!(p.requires_grad || p.node)) return;
    std::vector<double>& g = p.grad_values();
    const std::vector<double>& go = *o.grad;
    for (std::size_t i = 0; i < go.size(); ++i)
      if ((*p.data)[i] > 0.0) g[i] += go[i];
  });
}

Tensor add_row_bias(const Tensor& x, const Tensor& b) {
  const int n = x.rows(), m = x.cols();
  require(static_cast<int>(b.size()) == m, "add_row_bias: bias length mismatch");
  std::vector<double> out(x.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      out[static_cast<std::size_t>(i) * m + j] = x.at(i, j) + (*b.data)[j];
  return make_result({n, m}, std::move(out), {x, b}, [n, m](const Tensor& o) {
    Tensor px = o.node->parents[0];
    Tensor pb = o.node->parents[1];
    const std::vector<double>& go = *o.grad;
    if (px.requires_grad || px.node) {
      std::vector<double>& g = px.grad_values();
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i];
    }
    if (pb.requires_grad || pb.node) {
      std::vector<double>& g = pb.grad_values();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
          g[j] += go[static_cast<std::size_t>(i) * m + j];
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols: no parts");
  const int n = parts[0].rows();
  int m = 0;
  for (const Tensor& p : parts) {
    require(p.rows() == n, "concat_cols: row count mismatch");
    m += p.cols();
  }
  std::vector<double> out(static_cast<std::size_t>(n) * m);
  int off = 0;
  for (const Tensor& p : parts) {
    const int pc = p.cols();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < pc; ++j)
        out[static_cast<std::size_t>(i) * m + off + j] = p.at(i, j);
    off += pc;
  }
  return make_result({n, m}, std::move(out), parts, [n, m](const Tensor& o) {
    const std::vector<double>& go = *o.grad;
    int off = 0;
    for (Tensor p : o.node->parents) {
      const int pc = p.cols();
      if (p.requires_grad || p.node) {
        std::vector<double>& g = p.grad_values();
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < pc; ++j)
            g[static_cast<std::size_t>(i) * pc + j] +=
                go[static_cast<std::size_t>(i) * m + off + j];
      }
      off += pc;
    }
  });
}

Tensor slice_rows(const Tensor& a, int begin, int end) {
  const int n = a.rows(), m = a.cols();
  require(0 <= begin && begin < end && end <= n, "slice_rows: bad range");
  std::vector<double> out(static_cast<std::size_t>(end - begin) * m);
  std::copy(a.data->begin() + static_cast<std::size_t>(begin) * m,
            a.data->begin() + static_cast<std::size_t>(end) * m, out.begin());
  return make_result({end - begin, m}, std::move(out), {a},
                     [begin, m](const Tensor& o) {
                       Tensor p = o.node->parents[0];
                       if (!(p.requires_grad || p.node)) return;
                       std::vector<double>& g = p.grad_values();
                       const std::vector<double>& go = *o.grad;
                       const std::size_t base = static_cast<std::size_t>(begin) * m;
                       for (std::size_t i = 0; i < go.size(); ++i)
                         g[base + i] += go[i];
                     });
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
  const int v = table.rows(), m = table.cols();
  for (int id : ids)
    if (id < 0 || id >= v) throw std::invalid_argument("gather_rows: id out of range");
  std::vector<double> out(ids.size() * static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy(table.data->begin() + static_cast<std::size_t>(ids[i]) * m,
              table.data->begin() + static_cast<std::size_t>(ids[i] + 1) * m,
              out.begin() + i * m);
  return make_result({static_cast<int>(ids.size()), m}, std::move(out), {table},
                     [ids, m](const Tensor& o) {
                       Tensor p = o.node->parents[0];
                       if (!(p.requires_grad || p.node)) return;
                       std::vector<double>& g = p.grad_values();
                       const std::vector<double>& go = *o.grad;
                       for (std::size_t i = 0; i < ids.size(); ++i)
                         for (int j = 0; j < m; ++j)
                           g[static_cast<std::size_t>(ids[i]) * m + j] +=
                               go[i * m + j];
                     });
}

Tensor row_sum(const Tensor& a) {
  const int n = a.rows(), m = a.cols();
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out[i] += a.at(i, j);
  return make_result({n, 1}, std::move(out), {a}, [n, m](const Tensor& o) {
    Tensor p = o.node->parents[0];
    if (!(p.requires_grad || p.node)) return;
    std::vector<double>& g = p.grad_values();
    const std::vector<double>& go = *o.grad;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) g[static_cast<std::size_t>(i) * m + j] += go[i];
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : *a.data) s += v;
  return make_result({1}, {s}, {a}, [](const Tensor& o) {
    Tensor p = o.node->parents[0];
    if (!(p.requires_grad || p.node)) return;
    std::vector<double>& g = p.grad_values();
    const double go = (*o.grad)[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += go;
  });
}

Tensor masked_softmax(const Tensor& scores, const std::vector<uint8_t>& keep) {
  const int n = scores.rows(), m = scores.cols();
  require(keep.size() == scores.size(), "masked_softmax: mask size mismatch");
  std::vector<double> out(scores.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j)
      if (keep[static_cast<std::size_t>(i) * m + j]) mx = std::max(mx, scores.at(i, j));
    if (!std::isfinite(mx))
      throw std::invalid_argument("masked_softmax: row with no kept entry");
    double z = 0.0;
    for (int j = 0; j < m; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * m + j;
      if (keep[idx]) {
        out[idx] = std::exp(scores.at(i, j) - mx);
        z += out[idx];
      }
    }
    for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(i) * m + j] /= z;
  }
  return make_result({n, m}, std::move(out), {scores},
                     [n, m, keep](const Tensor& o) {
                       Tensor p = o.node->parents[0];
                       if (!(p.requires_grad || p.node)) return;
                       std::vector<double>& g = p.grad_values();
                       const std::vector<double>& go = *o.grad;
                       const std::vector<double>& w = *o.data;
                       for (int i = 0; i < n; ++i) {
                         double dot = 0.0;
                         for (int j = 0; j < m; ++j) {
                           const std::size_t idx = static_cast<std::size_t>(i) * m + j;
                           dot += go[idx] * w[idx];
                         }
                         for (int j = 0; j < m; ++j) {
                           const std::size_t idx = static_cast<std::size_t>(i) * m + j;
                           if (keep[idx]) g[idx] += w[idx] * (go[idx] - dot);
                         }
                       }
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  constexpr double kEps = 1e-5;
  const int n = x.rows(), m = x.cols();
  require(static_cast<int>(gain.size()) == m && static_cast<int>(bias.size()) == m,
          "layer_norm: gain/bias length mismatch");
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_sigma(n);
  for (int i = 0; i < n; ++i) {
    double mu = 0.0;
    for (int j = 0; j < m; ++j) mu += x.at(i, j);
    mu /= m;
    double var = 0.0;
    for (int j = 0; j < m; ++j) {
      const double d = x.at(i, j) - mu;
      var += d * d;
    }
    var /= m;
    inv_sigma[i] = 1.0 / std::sqrt(var + kEps);
    for (int j = 0; j < m; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * m + j;
      xhat[idx] = (x.at(i, j) - mu) * inv_sigma[i];
      out[idx] = xhat[idx] * (*gain.data)[j] + (*bias.data)[j];
    }
  }
  return make_result(
      {n, m}, std::move(out), {x, gain, bias},
      [n, m, xhat = std::move(xhat), inv_sigma = std::move(inv_sigma)](const Tensor& o) {
        Tensor px = o.node->parents[0];
        Tensor pg = o.node->parents[1];
        Tensor pb = o.node->parents[2];
        const std::vector<double>& go = *o.grad;
        if (pg.requires_grad || pg.node) {
          std::vector<double>& g = pg.grad_values();
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
              g[j] += go[static_cast<std::size_t>(i) * m + j] *
                      xhat[static_cast<std::size_t>(i) * m + j];
        }
        if (pb.requires_grad || pb.node) {
          std::vector<double>& g = pb.grad_values();
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
              g[j] += go[static_cast<std::size_t>(i) * m + j];
        }
        if (px.requires_grad || px.node) {
          std::vector<double>& g = px.grad_values();
          for (int i = 0; i < n; ++i) {
            double mean_dy = 0.0, mean_dy_xhat = 0.0;
            for (int j = 0; j < m; ++j) {
              const std::size_t idx = static_cast<std::size_t>(i) * m + j;
              const double dxhat = go[idx] * (*pg.data)[j];
              mean_dy += dxhat;
              mean_dy_xhat += dxhat * xhat[idx];
            }
            mean_dy /= m;
            mean_dy_xhat /= m;
            for (int j = 0; j < m; ++j) {
              const std::size_t idx = static_cast<std::size_t>(i) * m + j;
              const double dxhat = go[idx] * (*pg.data)[j];
              g[idx] += inv_sigma[i] * (dxhat - mean_dy - xhat[idx] * mean_dy_xhat);
            }
          }
        }
      });
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng, bool train) {
  if (!train || rate == 0.0) return x;
  require(rate > 0.0 && rate < 1.0, "dropout: rate must be in [0,1)");
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> mask(x.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = uni(rng) < rate ? 0.0 : keep_scale;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (*x.data)[i] * mask[i];
  return make_result(x.shape, std::move(out), {x},
                     [mask = std::move(mask)](const Tensor& o) {
                       Tensor p = o.node->parents[0];
                       if (!(p.requires_grad || p.node)) return;
                       std::vector<double>& g = p.grad_values();
                       const std::vector<double>& go = *o.grad;
                       for (std::size_t i = 0; i < go.size(); ++i)
                         g[i] += go[i] * mask[i];
                     });
}

void backward(Tensor& loss) {
  if (loss.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  // Topological order over tensors reachable through nodes.
  std::vector<Tensor> order;
  std::unordered_set<Node*> seen;
  struct Frame {
    Tensor t;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  if (loss.node) {
    seen.insert(loss.node.get());
    stack.push_back({loss, 0});
  }
  while (!stack.empty()) {
    Frame& f = stack.back();
    Node* nd = f.t.node.get();
    if (f.next < nd->parents.size()) {
      Tensor p = nd->parents[f.next++];
      if (p.node && !seen.count(p.node.get())) {
        seen.insert(p.node.get());
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.t);
      stack.pop_back();
    }
  }
  loss.grad_values()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor& t = *it;
    if (!t.grad) t.grad_values();  // no downstream contribution: zero grad
    t.node->backward(t);
  }
}

GradCheckReport grad_check(const std::function<Tensor()>& make_loss,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           double eps, int max_coords, std::mt19937_64& rng) {
  for (auto& [name, p] : params) const_cast<Tensor&>(p).zero_grad();
  Tensor loss = make_loss();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& [name, p] : params)
    analytic.push_back(p.grad ? *p.grad : std::vector<double>(p.size(), 0.0));

  GradCheckReport rep;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi].second;
    const std::size_t n = p.size();
    std::vector<std::size_t> coords(n);
    for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    if (static_cast<int>(n) > max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords);
    }
    for (std::size_t c : coords) {
      const double orig = (*p.data)[c];
      (*p.data)[c] = orig + eps;
      const double fp = make_loss().item();
      (*p.data)[c] = orig - eps;
      const double fm = make_loss().item();
      (*p.data)[c] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[pi][c];
      const double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = params[pi].first;
        rep.worst_index = static_cast<int>(c);
        rep.analytic = a;
        rep.numeric = numeric;
      }
    }
  }
  return rep;
}

}  // namespace gdseg
