#pragma once

#include <cmath>
#include <numbers>
#include <utility>

namespace puzzlemeasure {

template <class Eval>
std::vector<Cx> aberth_roots(Eval&& eval, std::size_t n, double radius, int max_iter) {
  std::vector<Cx> z(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double phase = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.25) / static_cast<double>(n) + 0.4;
    z[k] = std::polar(radius, phase);
  }
  std::vector<bool> done(n, false);
  for (int it = 0; it < max_iter; ++it) {
    std::size_t moving = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (done[k]) continue;
      auto [p, dp] = eval(z[k]);
      if (p == Cx{0.0, 0.0}) {
        done[k] = true;
        continue;
      }
      const Cx ratio = p / dp;
      Cx repulsion{0.0, 0.0};
      for (std::size_t j = 0; j < n; ++j) {
        if (j != k) repulsion += 1.0 / (z[k] - z[j]);
      }
      const Cx step = ratio / (1.0 - ratio * repulsion);
      if (!is_finite(step)) continue;
      z[k] -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z[k]))) done[k] = true;
      else ++moving;
    }
    if (moving == 0) break;
  }
  for (auto& root : z) {
    for (int it = 0; it < 8; ++it) {
      auto [p, dp] = eval(root);
      if (dp == Cx{0.0, 0.0}) break;
      const Cx step = p / dp;
      if (!is_finite(step)) break;
      root -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(root))) break;
    }
  }
  return z;
}

}  // namespace puzzlemeasure
