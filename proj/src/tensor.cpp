#include "hyperts/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace hyperts {

namespace {

void check_dims(const Shape& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must be non-empty");
  for (std::size_t d : shape)
    if (d == 0)
      throw std::invalid_argument("tensor dims must be >= 1, got " +
                                  shape_str(shape));
}

}  // namespace

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_dims(shape_);
  if (data_.size() != shape_size(shape_))
    throw std::invalid_argument("tensor data length " +
                                std::to_string(data_.size()) +
                                " does not match shape " + shape_str(shape_));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::reshape(Shape shape) {
  check_dims(shape);
  if (shape_size(shape) != data_.size())
    throw std::invalid_argument("cannot reshape " + shape_str(shape_) + " to " +
                                shape_str(shape));
  shape_ = std::move(shape);
}

}  // namespace hyperts
