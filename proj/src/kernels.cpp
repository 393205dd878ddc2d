#include "autohas/kernels.hpp"

#include <cstdint>

namespace autohas::kernels {

namespace {

bool large(MatDims d) { return d.rows * d.inner * d.cols >= kParallelMacThreshold; }

inline double dot_ab(const double* a, const double* b, std::size_t k, std::size_t bstride) {
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += a[i] * b[i * bstride];
  return acc;
}

}  // namespace

void matmul_serial(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d) {
  for (std::size_t r = 0; r < d.rows; ++r)
    for (std::size_t c = 0; c < d.cols; ++c)
      out[r * d.cols + c] = dot_ab(&a[r * d.inner], &b[c], d.inner, d.cols);
}

void matmul_parallel(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d) {
  const auto rows = static_cast<std::int64_t>(d.rows);
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < d.cols; ++c)
      po[r * d.cols + c] = dot_ab(pa + r * d.inner, pb + c, d.inner, d.cols);
}

void matmul_bt_serial(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d) {
  for (std::size_t r = 0; r < d.rows; ++r)
    for (std::size_t c = 0; c < d.cols; ++c)
      out[r * d.cols + c] = dot_ab(&a[r * d.inner], &b[c * d.inner], d.inner, 1);
}

void matmul_bt_parallel(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d) {
  const auto rows = static_cast<std::int64_t>(d.rows);
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < d.cols; ++c)
      po[r * d.cols + c] = dot_ab(pa + r * d.inner, pb + c * d.inner, d.inner, 1);
}

void matmul_at_serial(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d) {
  for (std::size_t r = 0; r < d.rows; ++r)
    for (std::size_t c = 0; c < d.cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d.inner; ++k) acc += a[k * d.rows + r] * b[k * d.cols + c];
      out[r * d.cols + c] = acc;
    }
}

void matmul_at_parallel(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d) {
  const auto rows = static_cast<std::int64_t>(d.rows);
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < d.cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d.inner; ++k) acc += pa[k * d.rows + r] * pb[k * d.cols + c];
      po[r * d.cols + c] = acc;
    }
}

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d) {
  large(d) ? matmul_parallel(a, b, out, d) : matmul_serial(a, b, out, d);
}

void matmul_bt(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d) {
  large(d) ? matmul_bt_parallel(a, b, out, d) : matmul_bt_serial(a, b, out, d);
}

void matmul_at(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d) {
  large(d) ? matmul_at_parallel(a, b, out, d) : matmul_at_serial(a, b, out, d);
}

}  // namespace autohas::kernels
