#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "puzzlemeasure/angle.hpp"
#include "puzzlemeasure/dynamics.hpp"

namespace puzzlemeasure {

/// Green's function and external rays of the filled Julia set of a unicritical map.
struct PotentialField {
  explicit PotentialField(UnicriticalMap f);

  UnicriticalMap map;
  double escape_radius;
};

struct GreenValue {
  double value = 0.0;
  bool escaped = false;
  int iterations = 0;
};

inline constexpr int kGreenMaxIterations = 10000;

GreenValue green(const PotentialField& field, Cx z, int n_max = kGreenMaxIterations);

/// Potential above which a point is read off directly in the Boettcher coordinate.
inline constexpr double kReadPotential = 13.8;  // log(1e6)

struct RayPoint {
  Cx z;
  double potential;
};

struct ExternalRay {
  Angle angle;
  int degree = 2;
  int steps_per_halving = 24;
  std::vector<RayPoint> points;  // strictly decreasing potential
  std::optional<Cx> landing;
};

struct RayTrace {
  ExternalRay ray;
  std::optional<ErrorKind> error;  // kNewtonStall / kBranchLost; ray holds the prefix
};

inline constexpr int kStepsPerHalving = 24;

/// frac(l^m * theta) for the angle being traced.
using AnglePowers = std::function<double(int m)>;

AnglePowers angle_powers(const Angle& theta, int degree);

/// Ray polyline from potential g_hi down to g_lo, one Newton-continued point per
/// 2^(-1/steps_per_halving) potential ratio.
RayTrace trace_ray(const PotentialField& field, const Angle& theta, double g_hi, double g_lo,
                   int steps_per_halving = kStepsPerHalving);

/// Same continuation for an angle known only through its powers. Points only.
std::vector<RayPoint> trace_ray_points(const PotentialField& field, const AnglePowers& powers, double g_hi,
                                       double g_lo, int steps_per_halving = kStepsPerHalving);

/// A single point on the ray of angle theta at potential g.
Cx ray_point(const PotentialField& field, const Angle& theta, double g, int steps_per_halving = kStepsPerHalving);

/// Point of the external ray at potential g in the iterated coordinate: solves f^m(z) = target
/// by Newton from seed. Returns nullopt on stall.
std::optional<Cx> solve_iterated(const UnicriticalMap& f, Cx seed, int m, Cx target, int max_iter = 60);

/// External angle of an escaping point by outward continuation along its gradient line.
/// Throws kInvalidArgument for non-escaping points and kBranchLost if continuation fails.
double external_angle(const PotentialField& field, Cx z, int steps_per_halving = 8);

/// Landing point extrapolated from the tail of a traced ray; throws kNotLanded.
Cx land_ray(const ExternalRay& ray, double tol);

struct AlphaRays {
  int q = 0;
  std::vector<Angle> angles;  // ascending, i.e. rotation order
  Cx alpha;
};

inline constexpr int kDefaultCycleSearchCap = 12;

/// The periodic cycle of rays co-landing at the dividing fixed point.
/// Throws kNoDividingFixedPoint or kNoCycleFound.
AlphaRays rays_at_alpha(const PotentialField& field, int q_max = kDefaultCycleSearchCap, double tol = 1e-4);

/// Closed polyline at potential g0 sampled at angles k / n_samples.
std::vector<Cx> equipotential(const PotentialField& field, double g0, int n_samples);

/// CSV with header angle_num,angle_den,potential,re,im.
void write_rays_csv(std::ostream& out, std::span<const ExternalRay> rays);

}  // namespace puzzlemeasure
