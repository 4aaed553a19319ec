#include "puzzlemeasure/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>

#include "puzzlemeasure/kernels/kernels.hpp"
#include "puzzlemeasure/puzzle.hpp"

namespace puzzlemeasure {

namespace {

enum : std::uint8_t { kZero = 0, kOne = 1, kFree = 2 };

constexpr double kCgTolerance = 1e-9;
constexpr int kCoarsest = 64;

struct Solve {
  std::vector<double> u;
  double energy = 0.0;
  int iterations = 0;
};

std::vector<std::uint8_t> classify(const GridFrame& fr, const Region& outer, const Region& inner) {
  const int n = fr.n;
  std::vector<std::uint8_t> kind(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Cx z = fr.node(i, j);
      std::uint8_t k = kFree;
      if (inner(z)) {
        k = kZero;
      } else if (!outer(z)) {
        k = kOne;
      }
      if ((i == 0 || j == 0 || i == n - 1 || j == n - 1) && k != kOne) {
        throw Error(ErrorKind::kInvalidArgument, "annulus reaches the edge of the grid frame");
      }
      kind[static_cast<std::size_t>(j) * n + i] = k;
    }
  }
  return kind;
}

template <class F>
void for_neighbours(int n, std::size_t p, F&& fn) {
  const int i = static_cast<int>(p % n);
  const int j = static_cast<int>(p / n);
  if (i > 0) fn(p - 1);
  if (i + 1 < n) fn(p + 1);
  if (j > 0) fn(p - n);
  if (j + 1 < n) fn(p + n);
}

// Lattice steps from the inner set to the outer set.
int boundary_gap(const std::vector<std::uint8_t>& kind, int n) {
  std::vector<int> dist(kind.size(), -1);
  std::deque<std::size_t> queue;
  for (std::size_t p = 0; p < kind.size(); ++p) {
    if (kind[p] == kZero) {
      dist[p] = 0;
      queue.push_back(p);
    }
  }
  if (queue.empty()) return 0;
  while (!queue.empty()) {
    const std::size_t p = queue.front();
    queue.pop_front();
    if (kind[p] == kOne) return dist[p];
    for_neighbours(n, p, [&](std::size_t q) {
      if (dist[q] < 0) {
        dist[q] = dist[p] + 1;
        queue.push_back(q);
      }
    });
  }
  return 0;
}

std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& kind, int n) {
  auto out = kind;
  for (std::size_t p = 0; p < kind.size(); ++p) {
    if (kind[p] != kFree) continue;
    for_neighbours(n, p, [&](std::size_t q) {
      if (kind[q] == kZero) out[p] = kZero;
      else if (kind[q] == kOne && out[p] == kFree) out[p] = kOne;
    });
  }
  return out;
}

std::vector<std::uint8_t> erode(const std::vector<std::uint8_t>& kind, int n) {
  auto out = kind;
  for (std::size_t p = 0; p < kind.size(); ++p) {
    if (kind[p] == kFree) continue;
    const int i = static_cast<int>(p % n);
    const int j = static_cast<int>(p / n);
    if (i == 0 || j == 0 || i == n - 1 || j == n - 1) continue;
    for_neighbours(n, p, [&](std::size_t q) {
      if (kind[q] == kFree) out[p] = kFree;
    });
  }
  return out;
}

double dirichlet_energy(const std::vector<double>& u, int n) {
  double e = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::size_t p = static_cast<std::size_t>(j) * n + i;
      if (i + 1 < n) e += (u[p + 1] - u[p]) * (u[p + 1] - u[p]);
      if (j + 1 < n) e += (u[p + n] - u[p]) * (u[p + n] - u[p]);
    }
  }
  return e;
}

Solve solve(const std::vector<std::uint8_t>& kind, int n, const std::vector<double>* warm) {
  const auto& k = kernels::active();
  const std::size_t size = kind.size();
  std::vector<double> mask(size), ud(size), v(size, 0.0), b(size), r(size), p(size), ap(size);
  for (std::size_t q = 0; q < size; ++q) {
    mask[q] = kind[q] == kFree ? 1.0 : 0.0;
    ud[q] = kind[q] == kOne ? 1.0 : 0.0;
  }
  k.stencil5(ud.data(), mask.data(), b.data(), n, n);
  for (auto& x : b) x = -x;
  if (warm) {
    for (std::size_t q = 0; q < size; ++q) v[q] = mask[q] * ((*warm)[q] - ud[q]);
  }
  k.stencil5(v.data(), mask.data(), ap.data(), n, n);
  for (std::size_t q = 0; q < size; ++q) r[q] = b[q] - ap[q];
  p = r;
  double rr = k.dot(r.data(), r.data(), size);
  const double stop = kCgTolerance * kCgTolerance * k.dot(b.data(), b.data(), size);
  Solve out;
  const int max_iter = 20 * n + 1000;
  while (rr > stop && out.iterations < max_iter) {
    k.stencil5(p.data(), mask.data(), ap.data(), n, n);
    const double alpha = rr / k.dot(p.data(), ap.data(), size);
    k.axpy(alpha, p.data(), v.data(), size);
    k.axpy(-alpha, ap.data(), r.data(), size);
    const double rr_new = k.dot(r.data(), r.data(), size);
    k.xpay(r.data(), rr_new / rr, p.data(), size);
    rr = rr_new;
    ++out.iterations;
  }
  out.u.resize(size);
  for (std::size_t q = 0; q < size; ++q) out.u[q] = ud[q] + v[q];
  out.energy = dirichlet_energy(out.u, n);
  return out;
}

std::vector<double> interpolate(const std::vector<double>& coarse, const GridFrame& cf, const GridFrame& ff) {
  std::vector<double> out(static_cast<std::size_t>(ff.n) * ff.n);
  const int m = cf.n;
  for (int j = 0; j < ff.n; ++j) {
    for (int i = 0; i < ff.n; ++i) {
      const Cx z = (ff.node(i, j) - cf.origin) / cf.spacing;
      const double x = std::clamp(z.real(), 0.0, m - 1.0);
      const double y = std::clamp(z.imag(), 0.0, m - 1.0);
      const int i0 = std::min(static_cast<int>(x), m - 2);
      const int j0 = std::min(static_cast<int>(y), m - 2);
      const double tx = x - i0;
      const double ty = y - j0;
      auto at = [&](int a, int b) { return coarse[static_cast<std::size_t>(b) * m + a]; };
      out[static_cast<std::size_t>(j) * ff.n + i] = (1 - ty) * ((1 - tx) * at(i0, j0) + tx * at(i0 + 1, j0)) +
                                                    ty * ((1 - tx) * at(i0, j0 + 1) + tx * at(i0 + 1, j0 + 1));
    }
  }
  return out;
}

GridFrame coarsen(const GridFrame& fr, int n) {
  return GridFrame{fr.origin, fr.spacing * (fr.n - 1) / (n - 1), n};
}

}  // namespace

GridFrame frame_for(const std::vector<Cx>& outer, int grid_n) {
  if (outer.empty() || grid_n < 8) throw Error(ErrorKind::kInvalidArgument, "frame needs a polygon and grid_n >= 8");
  double x0 = outer[0].real(), x1 = x0, y0 = outer[0].imag(), y1 = y0;
  for (const Cx& z : outer) {
    x0 = std::min(x0, z.real());
    x1 = std::max(x1, z.real());
    y0 = std::min(y0, z.imag());
    y1 = std::max(y1, z.imag());
  }
  const double extent = std::max(x1 - x0, y1 - y0);
  const double h = extent / (grid_n - 7);
  const Cx center((x0 + x1) / 2, (y0 + y1) / 2);
  const double half = h * (grid_n - 1) / 2;
  return GridFrame{center - Cx(half, half), h, grid_n};
}

ModulusEstimate annulus_modulus(const Region& outer, const Region& inner, const GridFrame& frame) {
  const int n = frame.n;
  const auto kind = classify(frame, outer, inner);
  if (boundary_gap(kind, n) < 2) throw Error(ErrorKind::kDegenerateAnnulus, "boundaries closer than two lattice cells");

  std::vector<int> sizes{n};
  while (sizes.back() / 2 >= kCoarsest) sizes.push_back(sizes.back() / 2);
  std::vector<double> warm;
  GridFrame prev;
  Solve mid;
  int iterations = 0;
  for (auto it = sizes.rbegin(); it != sizes.rend(); ++it) {
    const GridFrame fr = *it == n ? frame : coarsen(frame, *it);
    const auto k = *it == n ? kind : classify(fr, outer, inner);
    if (!warm.empty()) warm = interpolate(warm, prev, fr);
    mid = solve(k, *it, warm.empty() ? nullptr : &warm);
    iterations += mid.iterations;
    warm = mid.u;
    prev = fr;
  }
  const Solve grown = solve(dilate(kind, n), n, &mid.u);
  const Solve shrunk = solve(erode(kind, n), n, &mid.u);
  ModulusEstimate est;
  est.estimate = 1.0 / mid.energy;
  est.lower = std::min(est.estimate, 1.0 / grown.energy);
  est.upper = std::max(est.estimate, 1.0 / shrunk.energy);
  est.method = "grid-dirichlet-energy-cg";
  est.grid_n = n;
  est.cg_iterations = iterations + grown.iterations + shrunk.iterations;
  return est;
}

ModulusEstimate annulus_modulus(const std::vector<Cx>& outer, const std::vector<Cx>& inner, int grid_n) {
  return annulus_modulus([&](Cx z) { return point_in_polygon(z, outer); },
                         [&](Cx z) { return point_in_polygon(z, inner); }, frame_for(outer, grid_n));
}

double round_annulus_modulus(double r, double big_r) { return std::log(big_r / r) / (2 * std::numbers::pi); }

}  // namespace puzzlemeasure
