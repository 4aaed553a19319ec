#include "puzzlemeasure/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "puzzlemeasure/potential.hpp"

namespace puzzlemeasure {

UnicriticalMap::UnicriticalMap(int degree, Cx c) : degree_(degree), c_(c) {
  if (degree < 2 || degree % 2 != 0) {
    throw Error(ErrorKind::kInvalidArgument, "degree must be even and at least 2");
  }
  if (!is_finite(c)) throw Error(ErrorKind::kInvalidArgument, "parameter must be finite");
}

Cx UnicriticalMap::power(Cx z) const noexcept {
  // Repeated squaring: every even degree is handled by mul only.
  Cx result{1.0, 0.0};
  Cx base = z;
  int e = degree_;
  while (e > 0) {
    if (e & 1) result *= base;
    e >>= 1;
    if (e > 0) base *= base;
  }
  return result;
}

Cx UnicriticalMap::derivative(Cx z) const noexcept {
  Cx result{static_cast<double>(degree_), 0.0};
  for (int k = 1; k < degree_; ++k) result *= z;
  return result;
}

Cx evaluate(const UnicriticalMap& f, Cx z) {
  const Cx w = f.apply(z);
  if (!is_finite(w) || std::abs(w) > kOverflowGuard) throw Error(ErrorKind::kDiverged, "iterate left the guard");
  return w;
}

Cx derivative(const UnicriticalMap& f, Cx z) { return f.derivative(z); }

OrbitResult orbit(const UnicriticalMap& f, Cx z, std::size_t n) {
  OrbitResult out;
  out.points.reserve(n + 1);
  out.points.push_back(z);
  for (std::size_t k = 0; k < n; ++k) {
    const Cx w = f.apply(out.points.back());
    if (!is_finite(w) || std::abs(w) > kOverflowGuard) {
      out.diverged = true;
      break;
    }
    out.points.push_back(w);
  }
  return out;
}

double orbit_derivative_modulus(const UnicriticalMap& f, Cx z, std::size_t n) {
  double product = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    product *= std::abs(f.derivative(z));
    z = f.apply(z);
  }
  return product;
}

std::string_view to_string(PointClass c) {
  switch (c) {
    case PointClass::kSuperattracting: return "superattracting";
    case PointClass::kAttracting: return "attracting";
    case PointClass::kRepelling: return "repelling";
    case PointClass::kParabolic: return "parabolic";
    case PointClass::kIrrationallyIndifferent: return "irrationally-indifferent";
  }
  return "unknown";
}

PointClass classify_multiplier(Cx m, double tol) {
  const double r = std::abs(m);
  if (r <= tol) return PointClass::kSuperattracting;
  if (r < 1.0 - tol) return PointClass::kAttracting;
  if (r > 1.0 + tol) return PointClass::kRepelling;
  const double turns = std::arg(m) / (2.0 * std::numbers::pi);
  for (int q = 1; q <= kRootOfUnityDenominatorCap; ++q) {
    const double p = std::round(turns * q);
    const Cx root = std::polar(1.0, 2.0 * std::numbers::pi * p / q);
    if (std::abs(m - root) <= tol) return PointClass::kParabolic;
  }
  return PointClass::kIrrationallyIndifferent;
}

const FixedPointInfo* FixedPointSet::find(FixedPointRole role) const {
  for (const auto& p : points) {
    if (p.role == role) return &p;
  }
  return nullptr;
}

namespace {

struct Cluster {
  Cx sum;
  int count;
  Cx mean() const { return sum / static_cast<double>(count); }
};

std::vector<Cluster> merge_roots(const std::vector<Cx>& roots, double rel) {
  std::vector<Cluster> clusters;
  for (const Cx z : roots) {
    bool merged = false;
    for (auto& cl : clusters) {
      if (std::abs(cl.mean() - z) <= rel * std::max(1.0, std::abs(z))) {
        cl.sum += z;
        ++cl.count;
        merged = true;
        break;
      }
    }
    if (!merged) clusters.push_back({z, 1});
  }
  return clusters;
}

Cx cycle_multiplier(const UnicriticalMap& f, Cx z, int p) {
  Cx m{1.0, 0.0};
  for (int k = 0; k < p; ++k) {
    m *= f.derivative(z);
    z = f.apply(z);
  }
  return m;
}

double root_radius(const UnicriticalMap& f) { return PotentialField(f).escape_radius; }

}  // namespace

FixedPointSet fixed_points(const UnicriticalMap& f) {
  std::vector<Cx> roots;
  if (f.degree() == 2) {
    const Cx s = std::sqrt(1.0 - 4.0 * f.c());
    roots = {(1.0 + s) / 2.0, (1.0 - s) / 2.0};
  } else {
    auto eval = [&f](Cx z) { return std::pair<Cx, Cx>{f.apply(z) - z, f.derivative(z) - 1.0}; };
    roots = aberth_roots(eval, static_cast<std::size_t>(f.degree()), 0.5 * root_radius(f));
  }
  FixedPointSet out;
  for (const auto& cl : merge_roots(roots, 1e-6)) {
    const Cx z = cl.mean();
    const Cx m = f.derivative(z);
    out.points.push_back({z, m, classify_multiplier(m), std::nullopt, cl.count});
  }

  // beta: landing point of the angle-0 ray
  const PotentialField field(f);
  auto trace = trace_ray(field, Angle{0, 1}, 1.0, 1e-12);
  std::optional<Cx> landing;
  try {
    landing = land_ray(trace.ray, 1e-6);
  } catch (const Error&) {
  }
  if (!landing) {
    out.role_error = ErrorKind::kRoleUndetermined;
    return out;
  }
  std::size_t beta = 0;
  for (std::size_t k = 1; k < out.points.size(); ++k) {
    if (std::abs(out.points[k].location - *landing) < std::abs(out.points[beta].location - *landing)) beta = k;
  }
  if (std::abs(out.points[beta].location - *landing) > 1e-4 * std::max(1.0, std::abs(*landing))) {
    out.role_error = ErrorKind::kRoleUndetermined;
    return out;
  }
  out.points[beta].role = FixedPointRole::kBeta;
  if (f.degree() == 2 && out.points.size() == 2) out.points[1 - beta].role = FixedPointRole::kAlpha;
  return out;
}

std::vector<FixedPointInfo> periodic_points(const UnicriticalMap& f, int p) {
  if (p < 1) throw Error(ErrorKind::kInvalidArgument, "period must be positive");
  const double n_d = std::pow(static_cast<double>(f.degree()), p);
  if (n_d > static_cast<double>(kMaxPeriodicDegree)) {
    throw Error(ErrorKind::kDegreeTooLarge, "l^p exceeds the periodic-point budget");
  }
  const auto n = static_cast<std::size_t>(n_d);
  auto eval = [&f, p](Cx z) {
    Cx u = z;
    Cx du{1.0, 0.0};
    for (int k = 0; k < p; ++k) {
      du *= f.derivative(u);
      u = f.apply(u);
    }
    return std::pair<Cx, Cx>{u - z, du - 1.0};
  };
  const auto roots = aberth_roots(eval, n, 0.5 * root_radius(f), 2000);
  std::vector<FixedPointInfo> out;
  for (const auto& cl : merge_roots(roots, 1e-6)) {
    const Cx z = cl.mean();
    bool lower = false;
    Cx u = z;
    for (int d = 1; d < p; ++d) {
      u = f.apply(u);
      if (p % d == 0 && std::abs(u - z) <= 1e-7 * std::max(1.0, std::abs(z))) {
        lower = true;
        break;
      }
    }
    if (lower) continue;
    const Cx m = cycle_multiplier(f, z, p);
    out.push_back({z, m, classify_multiplier(m), std::nullopt, cl.count});
  }
  return out;
}

}  // namespace puzzlemeasure
