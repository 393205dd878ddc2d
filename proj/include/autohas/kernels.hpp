#pragma once

#include <cstddef>
#include <span>

// Dense matrix kernels. Each kernel has a serial reference and an OpenMP
// version; both compute every output entry with the same fixed-order inner
// sum, so their results are bitwise identical for any thread count.
namespace autohas::kernels {

struct MatDims {
  std::size_t rows;   // rows of the result
  std::size_t inner;  // contracted extent
  std::size_t cols;   // cols of the result
};

// out[r x c] = a[r x k] * b[k x c]
void matmul_serial(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d);
void matmul_parallel(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d);

// out[r x c] = a[r x k] * b[c x k]^T
void matmul_bt_serial(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d);
void matmul_bt_parallel(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d);

// out[r x c] = a[k x r]^T * b[k x c]
void matmul_at_serial(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d);
void matmul_at_parallel(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d);

// Dispatchers: pick the parallel kernel once the work is large enough to pay
// for a parallel region.
inline constexpr std::size_t kParallelMacThreshold = 1u << 15;

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d);
void matmul_bt(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d);
void matmul_at(std::span<const double> a, std::span<const double> b, std::span<double> out, MatDims d);

}  // namespace autohas::kernels
