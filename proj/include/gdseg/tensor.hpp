#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace gdseg {

class Tensor;

// One recorded operation: the tensors it consumed and the closure that
// pushes the output gradient back into them.
struct Node {
  std::vector<Tensor> parents;
  std::function<void(const Tensor& out)> backward;
};

// Dense row-major tensor of doubles. Copies share the underlying buffers;
// the implicit graph of Nodes acts as the gradient tape for one pass.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<int> shape, double fill, bool requires_grad = false);

  static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return data != nullptr; }
  std::size_t size() const { return data ? data->size() : 0; }
  int rows() const;
  int cols() const;

  double& at(int i, int j);
  double at(int i, int j) const;
  double item() const;  // scalar tensors only

  std::vector<double>& values() { return *data; }
  const std::vector<double>& values() const { return *data; }
  std::vector<double>& grad_values();  // allocates on first use
  void zero_grad();

  std::vector<int> shape;
  std::shared_ptr<std::vector<double>> data;
  std::shared_ptr<std::vector<double>> grad;
  std::shared_ptr<Node> node;
  bool requires_grad = false;
};

// Differentiable operations. Shape mismatches throw std::invalid_argument.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor add_row_bias(const Tensor& x, const Tensor& b);  // broadcast b over rows
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, int begin, int end);  // half-open
Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);
Tensor row_sum(const Tensor& a);  // n x m -> n x 1
Tensor sum(const Tensor& a);      // -> scalar

// Row-wise softmax restricted to entries whose keep flag is set. Dropped
// entries get weight exactly 0 (and gradient exactly 0). A row with no kept
// entry is a malformed mask and throws.
Tensor masked_softmax(const Tensor& scores, const std::vector<uint8_t>& keep);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);

// Inverted-scaling dropout. Identity when train is false or rate is 0.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng, bool train);

// Builds an op result with a custom backward closure; attaches a Node only
// when a parent participates in the tape. For composite ops outside this
// translation unit.
Tensor make_op_result(std::vector<int> shape, std::vector<double> values,
                      std::vector<Tensor> parents,
                      std::function<void(const Tensor&)> backward_fn);

// Runs the tape backward from a scalar loss, accumulating into .grad of
// every tensor with requires_grad that influenced it.
void backward(Tensor& loss);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central finite differences against tape gradients. make_loss must rebuild
// the computation deterministically on every call (same rng seeding inside).
// Samples up to max_coords coordinates per parameter tensor.
GradCheckReport grad_check(const std::function<Tensor()>& make_loss,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           double eps, int max_coords, std::mt19937_64& rng);

}  // namespace gdseg
