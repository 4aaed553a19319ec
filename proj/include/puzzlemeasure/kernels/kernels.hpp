#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace puzzlemeasure::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa);

/// Hot loops with one scalar reference implementation and an AVX2 variant. Both variants
/// perform the same floating-point operations in the same order (four interleaved partial
/// sums for reductions), so their results are bitwise identical.
struct Table {
  Isa isa;

  /// Iterate z -> z^l + c from each start until |z|^2 > r2 or max_iter steps. Writes the
  /// step count and the last iterate.
  void (*escape)(const double* re, const double* im, std::size_t n, int degree, double c_re, double c_im,
                 double r2, int max_iter, int* iters, double* z_re, double* z_im);

  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y += a x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  /// y = x + a y
  void (*xpay)(const double* x, double a, double* y, std::size_t n);

  /// Masked five-point Laplacian on an nx-by-ny row-major grid:
  /// y = mask * (4x - x_west - x_east - x_south - x_north). The outer ring of y is zeroed.
  void (*stencil5)(const double* x, const double* mask, double* y, std::size_t nx, std::size_t ny);

  /// y = A x for a CSR matrix.
  void (*csr_spmv)(std::size_t rows, const std::uint32_t* row_ptr, const std::uint32_t* col, const double* val,
                   const double* x, double* y);
};

const Table& scalar_table();
/// nullptr when the CPU lacks AVX2.
const Table* avx2_table();

/// Table chosen once from the CPU and PUZZLEMEASURE_SIMD (scalar | avx2).
const Table& active();

}  // namespace puzzlemeasure::kernels
