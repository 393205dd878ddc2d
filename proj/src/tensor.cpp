#include "autohas/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "autohas/error.hpp"

namespace autohas {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ')';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw NumericsError("tensor shape must have at least one dimension");
  for (std::size_t d : shape)
    if (d == 0) throw NumericsError("tensor extents must be positive, got " + shape_string(shape));
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(shape_size(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape(shape_);
  if (values_.size() != shape_size(shape_))
    throw NumericsError("tensor of shape " + shape_string(shape_) + " given " +
                        std::to_string(values_.size()) + " values");
  require_finite("tensor construction");
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  for (double& v : t.values_) v = value;
  t.require_finite("tensor construction");
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::rows() const { return shape_.size() == 1 ? 1 : shape_[0]; }

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  return values_.size() / shape_[0];
}

double Tensor::item() const {
  if (values_.size() != 1)
    throw NumericsError("item() on tensor of shape " + shape_string(shape_));
  return values_[0];
}

bool Tensor::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::require_finite(const char* context) const {
  if (!all_finite()) throw NumericsError(std::string("non-finite value in ") + context);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

}  // namespace autohas
