#include <doctest.h>

#include <atomic>
#include <cstring>
#include <random>
#include <stdexcept>

#include "puzzlemeasure/kernels/kernels.hpp"
#include "puzzlemeasure/parallel.hpp"

using namespace puzzlemeasure;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed, double lo = -1, double hi = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar reference") {
    const auto& k = kernels::scalar_table();
    CHECK(k.isa == kernels::Isa::kScalar);
    const std::vector<double> x{1, 2, 3, 4, 5}, y{1, 1, 1, 1, 1};
    CHECK(k.dot(x.data(), y.data(), 5) == 15.0);
    std::vector<double> z(y);
    k.axpy(2.0, x.data(), z.data(), 5);
    CHECK(z == std::vector<double>{3, 5, 7, 9, 11});
    k.xpay(x.data(), 0.5, z.data(), 5);
    CHECK(z[0] == 2.5);

    // z^2 from 0 with c = 1 escapes 0 -> 1 -> 2 -> 5
    double re = 0, im = 0, zr, zi;
    int it;
    k.escape(&re, &im, 1, 2, 1.0, 0.0, 16.0, 100, &it, &zr, &zi);
    CHECK(it == 3);
    CHECK(zr == 5.0);
  }

  TEST_CASE("AVX2 variants are bitwise identical to the scalar reference") {
    const auto* avx = kernels::avx2_table();
    if (!avx) {
      MESSAGE("CPU without AVX2; nothing to compare");
      return;
    }
    const auto& s = kernels::scalar_table();
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 33u, 1000u}) {
      const auto x = noise(n, n + 1), y = noise(n, n + 2);
      const double ds = s.dot(x.data(), y.data(), n), dv = avx->dot(x.data(), y.data(), n);
      CHECK(std::memcmp(&ds, &dv, sizeof ds) == 0);

      auto ys = y, yv = y;
      s.axpy(0.37, x.data(), ys.data(), n);
      avx->axpy(0.37, x.data(), yv.data(), n);
      CHECK(same_bits(ys, yv));
      s.xpay(x.data(), -1.3, ys.data(), n);
      avx->xpay(x.data(), -1.3, yv.data(), n);
      CHECK(same_bits(ys, yv));

      const auto re = noise(n, n + 3, -2, 2), im = noise(n, n + 4, -2, 2);
      for (int degree : {2, 4, 6}) {
        std::vector<int> is(n), iv(n);
        std::vector<double> zrs(n), zis(n), zrv(n), ziv(n);
        s.escape(re.data(), im.data(), n, degree, -0.12, 0.74, 100.0, 300, is.data(), zrs.data(), zis.data());
        avx->escape(re.data(), im.data(), n, degree, -0.12, 0.74, 100.0, 300, iv.data(), zrv.data(), ziv.data());
        CHECK(is == iv);
        CHECK(same_bits(zrs, zrv));
        CHECK(same_bits(zis, ziv));
      }
    }
    for (std::size_t nx : {3u, 5u, 17u, 64u}) {
      const std::size_t ny = nx + 2;
      const auto x = noise(nx * ny, nx);
      auto mask = noise(nx * ny, nx + 9, 0, 1);
      for (auto& m : mask) m = m < 0.3 ? 0.0 : 1.0;
      std::vector<double> ys(nx * ny, 7.0), yv(nx * ny, -7.0);
      s.stencil5(x.data(), mask.data(), ys.data(), nx, ny);
      avx->stencil5(x.data(), mask.data(), yv.data(), nx, ny);
      CHECK(same_bits(ys, yv));
    }
    // random sparse matrix
    std::mt19937_64 rng(8);
    const std::size_t rows = 257;
    std::vector<std::uint32_t> row_ptr{0}, col;
    std::vector<double> val;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t nnz = rng() % 13;
      for (std::size_t k = 0; k < nnz; ++k) {
        col.push_back(static_cast<std::uint32_t>(rng() % rows));
        val.push_back(static_cast<double>(rng() % 1000) / 7.0);
      }
      row_ptr.push_back(static_cast<std::uint32_t>(col.size()));
    }
    const auto x = noise(rows, 99);
    std::vector<double> ys(rows), yv(rows);
    s.csr_spmv(rows, row_ptr.data(), col.data(), val.data(), x.data(), ys.data());
    avx->csr_spmv(rows, row_ptr.data(), col.data(), val.data(), x.data(), yv.data());
    CHECK(same_bits(ys, yv));
  }

  TEST_CASE("active table names its ISA") {
    const auto& k = kernels::active();
    CHECK((kernels::to_string(k.isa) == "scalar" || kernels::to_string(k.isa) == "avx2"));
  }

  TEST_CASE("parallel_for visits every index once") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK(thread_count() >= 1);
  }

  TEST_CASE("parallel_for rethrows the lowest failing index") {
    try {
      parallel_for(100, [](std::size_t i) {
        if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "17");
    }
  }
}
