#include "puzzlemeasure/potential.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>

namespace puzzlemeasure {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Targets in the iterated coordinate have modulus at least e^kIterLog, where the
// Boettcher coordinate agrees with the identity to ~|c| * 1e-12.
constexpr double kIterLog = kReadPotential;
constexpr double kTopPotential = kReadPotential + 1.0;

double escape_radius_for(const UnicriticalMap& f) {
  const double mod_c = std::abs(f.c());
  if (f.degree() == 2) return std::max(2.0, mod_c) + 1.0;
  return std::pow(1.0 + mod_c, 1.0 / (f.degree() - 1)) + 1.0;
}

int iterate_count(double potential, int degree) {
  if (potential >= kIterLog) return 0;
  return static_cast<int>(std::ceil(std::log(kIterLog / potential) / std::log(static_cast<double>(degree))));
}

// Inverse Boettcher approximation at a large point w.
Cx target_in_iterated(const UnicriticalMap& f, double potential, double frac, int m) {
  const double radius_log = potential * std::pow(static_cast<double>(f.degree()), m);
  const Cx w = std::polar(std::exp(radius_log), kTwoPi * frac);
  const Cx correction = std::pow(1.0 + f.c() / f.power(w), -1.0 / f.degree());
  return w * correction;
}

struct TraceOutcome {
  std::vector<RayPoint> points;
  std::optional<ErrorKind> error;
};

TraceOutcome trace_impl(const PotentialField& field, const AnglePowers& powers, double g_hi, double g_lo, int steps) {
  if (!(g_hi > g_lo) || !(g_lo > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "trace_ray requires g_hi > g_lo > 0");
  }
  if (steps <= 0) throw Error(ErrorKind::kInvalidArgument, "steps_per_halving must be positive");
  const auto& f = field.map;
  const double ratio = std::exp2(-1.0 / steps);

  TraceOutcome out;
  const double g_top = std::max(g_hi, kTopPotential);
  Cx z = target_in_iterated(f, g_top, powers(0), 0);

  auto advance = [&](double g) -> bool {
    const int m = iterate_count(g, f.degree());
    const Cx t = target_in_iterated(f, g, powers(m), m);
    auto solved = solve_iterated(f, z, m, t);
    if (!solved) return false;
    z = *solved;
    return true;
  };

  // Unrecorded approach from the top down to g_hi.
  for (double g = g_top * ratio; g > g_hi; g *= ratio) {
    if (!advance(g)) {
      out.error = ErrorKind::kNewtonStall;
      return out;
    }
  }
  if (g_top != g_hi && !advance(g_hi)) {
    out.error = ErrorKind::kNewtonStall;
    return out;
  }
  out.points.push_back({z, g_hi});
  for (int k = 1;; ++k) {
    double g = g_hi * std::exp2(-static_cast<double>(k) / steps);
    const bool last = g <= g_lo * (1.0 + 1e-12);
    if (last) g = g_lo;
    if (!advance(g)) {
      out.error = ErrorKind::kNewtonStall;
      return out;
    }
    out.points.push_back({z, g});
    if (last) break;
  }
  return out;
}

Cx boettcher_of_large(const UnicriticalMap& f, Cx w) {
  // arg(phi(w)) = arg(w) + sum_k arg(1 + c / w_k^l) / l^(k+1), principal branches valid
  // because |c / w_k^l| is tiny here.
  double arg = std::arg(w);
  double scale = 1.0;
  Cx wk = w;
  for (int k = 0; k < 8; ++k) {
    scale /= f.degree();
    const Cx ratio = f.c() / f.power(wk);
    if (std::abs(ratio) < 1e-18) break;
    arg += std::arg(1.0 + ratio) * scale;
    wk = f.apply(wk);
    if (!is_finite(wk)) break;
  }
  return std::polar(1.0, arg);
}

}  // namespace

PotentialField::PotentialField(UnicriticalMap f) : map(f), escape_radius(escape_radius_for(f)) {}

GreenValue green(const PotentialField& field, Cx z, int n_max) {
  const auto& f = field.map;
  const double r2 = field.escape_radius * field.escape_radius;
  int n = 0;
  while (std::norm(z) <= r2) {
    if (n >= n_max) return GreenValue{0.0, false, n};
    z = f.apply(z);
    ++n;
  }
  const int escape_iter = n;
  // Tail: keep iterating until the correction log|1 + c/z^l| drops below machine precision.
  const double mod_c = std::abs(f.c());
  double scale = std::pow(static_cast<double>(f.degree()), -n);
  while (mod_c / std::pow(std::abs(z), f.degree()) > 1e-17 && std::abs(z) < 1e100) {
    z = f.apply(z);
    scale /= f.degree();
  }
  return GreenValue{std::log(std::abs(z)) * scale, true, escape_iter};
}

AnglePowers angle_powers(const Angle& theta, int degree) {
  return [theta, degree](int m) { return theta.power_fraction(degree, m); };
}

std::optional<Cx> solve_iterated(const UnicriticalMap& f, Cx seed, int m, Cx target, int max_iter) {
  Cx z = seed;
  const double scale = std::abs(target);
  double best_step = std::numeric_limits<double>::infinity();
  Cx best = z;
  for (int it = 0; it < max_iter; ++it) {
    Cx u = z;
    Cx du{1.0, 0.0};
    for (int j = 0; j < m; ++j) {
      du *= f.derivative(u);
      u = f.apply(u);
    }
    if (!is_finite(u) || !is_finite(du)) return std::nullopt;
    const Cx r = u - target;
    if (std::abs(r) <= 1e-13 * scale) return z;
    const Cx step = r / du;
    if (!is_finite(step)) return std::nullopt;
    z -= step;
    if (std::abs(step) < best_step) {
      best_step = std::abs(step);
      best = z;
    }
    // Deep in the iterated coordinate the residual floor is ~l^m * eps; a step at
    // rounding level means z is as accurate as it can be.
    if (std::abs(step) <= 1e-14 * std::abs(z)) return z;
  }
  // Rounding noise can keep Newton cycling just above the stopping rule.
  if (best_step <= 1e-12 * std::max(1.0, std::abs(best))) return best;
  return std::nullopt;
}

RayTrace trace_ray(const PotentialField& field, const Angle& theta, double g_hi, double g_lo, int steps_per_halving) {
  auto outcome = trace_impl(field, angle_powers(theta, field.map.degree()), g_hi, g_lo, steps_per_halving);
  RayTrace trace;
  trace.ray.angle = theta;
  trace.ray.degree = field.map.degree();
  trace.ray.steps_per_halving = steps_per_halving;
  trace.ray.points = std::move(outcome.points);
  trace.error = outcome.error;
  return trace;
}

std::vector<RayPoint> trace_ray_points(const PotentialField& field, const AnglePowers& powers, double g_hi,
                                       double g_lo, int steps_per_halving) {
  auto outcome = trace_impl(field, powers, g_hi, g_lo, steps_per_halving);
  if (outcome.error) throw Error(*outcome.error, "ray continuation failed");
  return std::move(outcome.points);
}

Cx ray_point(const PotentialField& field, const Angle& theta, double g, int steps_per_halving) {
  const auto& f = field.map;
  const auto powers = angle_powers(theta, f.degree());
  if (g >= kTopPotential) {
    const int m = iterate_count(g, f.degree());
    return target_in_iterated(f, g, powers(m), m);
  }
  auto pts = trace_ray_points(field, powers, kTopPotential, g, steps_per_halving);
  return pts.back().z;
}

double external_angle(const PotentialField& field, Cx z, int steps_per_halving) {
  const auto& f = field.map;
  const GreenValue gv = green(field, z);
  if (!gv.escaped || !(gv.value > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "external_angle requires an escaping point");
  }
  const double ratio = std::exp2(1.0 / steps_per_halving);
  double g = gv.value;
  Cx w = z;
  while (g < kReadPotential) {
    const double g_next = std::min(g * ratio, kReadPotential);
    const int m = iterate_count(g, f.degree());
    Cx u = w;
    for (int j = 0; j < m; ++j) u = f.apply(u);
    const Cx t = u * std::exp((g_next - g) * std::pow(static_cast<double>(f.degree()), m));
    auto solved = solve_iterated(f, w, m, t);
    if (!solved) throw Error(ErrorKind::kBranchLost, "outward continuation stalled");
    w = *solved;
    g = g_next;
  }
  double theta = std::arg(boettcher_of_large(f, w)) / kTwoPi;
  theta -= std::floor(theta);
  if (theta >= 1.0) theta = 0.0;
  return theta;
}

Cx land_ray(const ExternalRay& ray, double tol) {
  const auto& pts = ray.points;
  if (pts.size() < 10) throw Error(ErrorKind::kNotLanded, "ray tail shorter than 10 points");
  int period = 1;
  try {
    period = std::max(1, angle_period(ray.angle, ray.degree, 4096).period);
  } catch (const Error&) {
    period = 1;
  }
  const double halvings_per_block = period * std::log2(static_cast<double>(ray.degree));
  std::size_t block = static_cast<std::size_t>(std::lround(halvings_per_block * ray.steps_per_halving));
  block = std::max<std::size_t>(block, 1);
  while (2 * block + 1 > pts.size() && block > 1) block /= 2;
  if (2 * block + 1 > pts.size()) throw Error(ErrorKind::kNotLanded, "ray tail too short for extrapolation");
  // Aitken limit from three points one block apart, ending at index k
  auto limit = [&](std::size_t k, Cx& rho_out) -> std::optional<Cx> {
    const Cx d1 = pts[k].z - pts[k - block].z;
    const Cx d0 = pts[k - block].z - pts[k - 2 * block].z;
    if (std::abs(d1) == 0.0) {
      rho_out = 0.0;
      return pts[k].z;
    }
    if (std::abs(d0) == 0.0) return std::nullopt;
    rho_out = d1 / d0;
    if (!(std::abs(rho_out) < 0.99) || !is_finite(rho_out)) return std::nullopt;
    return pts[k].z + d1 * rho_out / (1.0 - rho_out);
  };
  const std::size_t k = pts.size() - 1;
  Cx rho;
  const auto l1 = limit(k, rho);
  if (!l1) throw Error(ErrorKind::kNotLanded, "tail does not contract geometrically");
  if (std::abs(*l1 - pts[k].z) <= tol) return *l1;
  // a slowly contracting tail is accepted when consecutive limits agree
  Cx rho0;
  const auto l0 = 3 * block + 1 <= pts.size() ? limit(k - block, rho0) : std::nullopt;
  if (l0 && std::abs(*l1 - *l0) <= tol) return *l1;
  throw Error(ErrorKind::kNotLanded, "tail not within tolerance of its limit");
}

namespace {

std::optional<Cx> try_land(const PotentialField& field, const Angle& theta, double g_lo, int steps, double tol) {
  auto trace = trace_ray(field, theta, 1.0, g_lo, steps);
  try {
    return land_ray(trace.ray, tol);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

AlphaRays rays_at_alpha(const PotentialField& field, int q_max, double tol) {
  const auto& f = field.map;
  const FixedPointSet fps = fixed_points(f);
  for (const auto& p : fps.points) {
    if (p.cls != PointClass::kRepelling) {
      throw Error(ErrorKind::kNoDividingFixedPoint, "a fixed point is not repelling");
    }
  }
  std::vector<Cx> candidates;
  std::vector<Cx> others;
  if (const auto* alpha = fps.find(FixedPointRole::kAlpha)) {
    candidates.push_back(alpha->location);
    if (const auto* beta = fps.find(FixedPointRole::kBeta)) others.push_back(beta->location);
  } else {
    const auto* beta = fps.find(FixedPointRole::kBeta);
    if (beta == nullptr) throw Error(ErrorKind::kNoDividingFixedPoint, "fixed point roles undetermined");
    others.push_back(beta->location);
    for (const auto& p : fps.points) {
      if (p.role != FixedPointRole::kBeta) candidates.push_back(p.location);
    }
  }
  const int l = f.degree();
  for (int q = 2; q <= q_max; ++q) {
    const double nd = std::pow(static_cast<double>(l), q) - 1.0;
    if (nd > 2e5) break;
    const auto n = static_cast<std::int64_t>(nd);
    for (std::int64_t k = 1; k < n; ++k) {
      // Only the minimal representative of an exact period-q cycle.
      std::int64_t x = k;
      bool minimal = true;
      int period = 0;
      do {
        x = x * l % n;
        ++period;
        if (x < k) minimal = false;
      } while (x != k && minimal);
      if (!minimal || period != q) continue;
      const Angle rep = Angle::make(k, n);
      auto screen = try_land(field, rep, 1e-7, 12, 1e-3);
      if (!screen) continue;
      for (const Cx cand : candidates) {
        const double dist = std::abs(*screen - cand);
        bool nearest = dist < 1e-2 * std::max(1.0, std::abs(cand));
        for (const Cx other : others) nearest = nearest && dist < std::abs(*screen - other);
        if (!nearest) continue;
        std::vector<Angle> cycle;
        Angle a = rep;
        for (int j = 0; j < q; ++j) {
          cycle.push_back(a);
          a = a.times(l);
        }
        bool all_land = true;
        for (const auto& theta : cycle) {
          auto land = try_land(field, theta, 1e-12, kStepsPerHalving, tol);
          if (!land || std::abs(*land - cand) > tol) {
            all_land = false;
            break;
          }
        }
        if (!all_land) continue;
        std::sort(cycle.begin(), cycle.end());
        return AlphaRays{q, cycle, cand};
      }
    }
  }
  throw Error(ErrorKind::kNoCycleFound, "no co-landing cycle up to q_max");
}

std::vector<Cx> equipotential(const PotentialField& field, double g0, int n_samples) {
  if (!(g0 > 0.0) || n_samples <= 0) throw Error(ErrorKind::kInvalidArgument, "equipotential needs g0 > 0");
  std::vector<Cx> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int k = 0; k < n_samples; ++k) out.push_back(ray_point(field, Angle::make(k, n_samples), g0));
  return out;
}

void write_rays_csv(std::ostream& out, std::span<const ExternalRay> rays) {
  out << "angle_num,angle_den,potential,re,im\n";
  out << std::setprecision(17);
  for (const auto& ray : rays) {
    for (const auto& p : ray.points) {
      out << ray.angle.num << ',' << ray.angle.den << ',' << p.potential << ',' << p.z.real() << ',' << p.z.imag()
          << '\n';
    }
  }
}

}  // namespace puzzlemeasure
