#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision kernels used by the toy model, its trainer and the
// embedder. Each kernel has a scalar reference implementation and optional
// SIMD variants; the active table is chosen once at startup from CPU features.
// Setting RPL_SIMD=scalar in the environment forces the reference kernels.
namespace rpl::simd {

struct KernelTable {
  std::string_view name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x, A is rows x cols row-major
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += A^T x, A is rows x cols row-major, x has rows entries, y has cols
  void (*gemv_t_acc)(const double* a, std::size_t rows, std::size_t cols, const double* x,
                     double* y);
  // A += alpha * x y^T, A is rows x cols row-major
  void (*ger)(double alpha, const double* x, std::size_t rows, const double* y, std::size_t cols,
              double* a);
};

const KernelTable& scalar_kernels();
// Null when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// Table selected for this process.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace rpl::simd
