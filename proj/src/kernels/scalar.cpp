#include "puzzlemeasure/kernels/kernels.hpp"

namespace puzzlemeasure::kernels {

namespace {

void escape(const double* re, const double* im, std::size_t n, int degree, double c_re, double c_im, double r2,
            int max_iter, int* iters, double* z_re, double* z_im) {
  for (std::size_t i = 0; i < n; ++i) {
    double x = re[i];
    double y = im[i];
    int k = 0;
    while (k < max_iter && x * x + y * y <= r2) {
      double px = x;
      double py = y;
      for (int j = 1; j < degree; ++j) {
        const double t = px * x - py * y;
        py = px * y + py * x;
        px = t;
      }
      x = px + c_re;
      y = py + c_im;
      ++k;
    }
    iters[i] = k;
    z_re[i] = x;
    z_im[i] = y;
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int k = 0; k < 4; ++k) s[k] += x[i + k] * y[i + k];
  }
  for (int k = 0; i < n; ++i, ++k) s[k] += x[i] * y[i];
  return (s[0] + s[2]) + (s[1] + s[3]);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay(const double* x, double a, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void stencil5(const double* x, const double* mask, double* y, std::size_t nx, std::size_t ny) {
  for (std::size_t i = 0; i < nx; ++i) {
    y[i] = 0.0;
    y[(ny - 1) * nx + i] = 0.0;
  }
  for (std::size_t j = 1; j + 1 < ny; ++j) {
    const std::size_t row = j * nx;
    y[row] = 0.0;
    y[row + nx - 1] = 0.0;
    for (std::size_t i = 1; i + 1 < nx; ++i) {
      const std::size_t p = row + i;
      const double lap = ((4.0 * x[p] - x[p - 1]) - x[p + 1]) - x[p - nx] - x[p + nx];
      y[p] = mask[p] * lap;
    }
  }
}

void csr_spmv(std::size_t rows, const std::uint32_t* row_ptr, const std::uint32_t* col, const double* val,
              const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    std::uint32_t k = row_ptr[r];
    const std::uint32_t end = row_ptr[r + 1];
    for (; k + 4 <= end; k += 4) {
      for (std::uint32_t q = 0; q < 4; ++q) s[q] += val[k + q] * x[col[k + q]];
    }
    for (int q = 0; k < end; ++k, ++q) s[q] += val[k] * x[col[k]];
    y[r] = (s[0] + s[2]) + (s[1] + s[3]);
  }
}

}  // namespace

const Table& scalar_table() {
  static const Table t{Isa::kScalar, escape, dot, axpy, xpay, stencil5, csr_spmv};
  return t;
}

}  // namespace puzzlemeasure::kernels
