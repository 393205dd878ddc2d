#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace autohas {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major tensor of 64-bit reals. Every constructed tensor is
// validated: positive extents, matching element count, finite entries.
class Tensor {
 public:
  Tensor() : Tensor(Shape{1}) {}
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value) { return Tensor(Shape{1}, {value}); }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);
  static Tensor vector(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::size_t rank() const { return shape_.size(); }

  // Matrix views; a rank-1 tensor is treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }
  const std::vector<double>& data() const { return values_; }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }

  double item() const;  // requires size() == 1

  bool all_finite() const;
  // Throws NumericsError naming `context` when any entry is NaN/Inf.
  void require_finite(const char* context) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  Shape shape_;
  std::vector<double> values_;
};

// Bitwise equality, distinguishing -0.0 from 0.0 and comparing NaN payloads.
bool bitwise_equal(const Tensor& a, const Tensor& b);

}  // namespace autohas
