#include "ipruning/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "ipruning/error.hpp"

namespace ipruning {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape_in, bool requires_grad_in)
    : shape(std::move(shape_in)), requires_grad(requires_grad_in) {
  for (std::size_t s : shape) {
    if (s == 0) throw DimensionError("tensor shape has a zero extent: " + shape_string(shape));
  }
  data.assign(shape_size(shape), 0.0);
  if (requires_grad) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!requires_grad) return;
  grad.assign(data.size(), 0.0);
}

TensorPtr Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  return std::make_shared<Tensor>(std::move(shape), requires_grad);
}

TensorPtr Tensor::from(std::vector<std::size_t> shape, std::vector<double> values,
                       bool requires_grad) {
  auto t = std::make_shared<Tensor>(std::move(shape), requires_grad);
  if (values.size() != t->data.size()) {
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_string(t->shape));
  }
  t->data = std::move(values);
  return t;
}

TensorPtr Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

void Tape::backward(const TensorPtr& loss) {
  if (!loss) throw InputError("backward: null loss tensor");
  if (loss->size() != 1) {
    throw InputError("backward: loss must be scalar, got shape " + shape_string(loss->shape));
  }
  if (!loss->requires_grad) {
    throw InputError("backward: loss tensor is detached from the tape (requires_grad=false)");
  }
  loss->grad.assign(1, 1.0);
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

}  // namespace ipruning
