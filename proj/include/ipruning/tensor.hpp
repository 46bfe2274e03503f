#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace ipruning {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense n-dimensional array of doubles in row-major order, with an optional
/// gradient buffer of the same length.
class Tensor {
 public:
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty unless requires_grad
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape_in, bool requires_grad_in);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  /// Reset the gradient buffer to zeros (allocating it if needed).
  void zero_grad();

  static TensorPtr zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static TensorPtr from(std::vector<std::size_t> shape, std::vector<double> values,
                        bool requires_grad = false);
  static TensorPtr scalar(double value, bool requires_grad = false);
};

std::size_t shape_size(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

/// Ordered record of executed operations. Each op pushes one adjoint step;
/// backward() replays the steps in reverse, visiting each exactly once.
class Tape {
 public:
  void record(std::function<void()> backward_step) { steps_.push_back(std::move(backward_step)); }

  /// Seed d(loss)/d(loss) = 1 and propagate adjoints through the tape.
  /// The loss must be a scalar produced through this tape.
  void backward(const TensorPtr& loss);

  std::size_t recorded_ops() const { return steps_.size(); }
  void clear() { steps_.clear(); }

 private:
  std::vector<std::function<void()>> steps_;
};

}  // namespace ipruning
