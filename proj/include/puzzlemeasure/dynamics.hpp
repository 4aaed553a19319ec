#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "puzzlemeasure/error.hpp"

namespace puzzlemeasure {

using Cx = std::complex<double>;

/// Iterates beyond this modulus are treated as escaped to infinity.
inline constexpr double kOverflowGuard = 1e150;

inline bool is_finite(Cx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// f(z) = z^l + c with even l >= 2. The critical point is 0.
class UnicriticalMap {
 public:
  UnicriticalMap(int degree, Cx c);

  int degree() const noexcept { return degree_; }
  Cx c() const noexcept { return c_; }

  /// z^l + c without the divergence check.
  Cx apply(Cx z) const noexcept { return power(z) + c_; }
  /// l z^(l-1).
  Cx derivative(Cx z) const noexcept;
  Cx power(Cx z) const noexcept;

  bool has_real_coefficients() const noexcept { return c_.imag() == 0.0; }

 private:
  int degree_;
  Cx c_;
};

/// z^l + c; throws ErrorKind::kDiverged when the result is non-finite or beyond the guard.
Cx evaluate(const UnicriticalMap& f, Cx z);
Cx derivative(const UnicriticalMap& f, Cx z);

struct OrbitResult {
  std::vector<Cx> points;  // z, f(z), ... (a prefix when diverged)
  bool diverged = false;
};

OrbitResult orbit(const UnicriticalMap& f, Cx z, std::size_t n);

/// |D(f^n)(z)| as a product along the orbit.
double orbit_derivative_modulus(const UnicriticalMap& f, Cx z, std::size_t n);

enum class PointClass { kSuperattracting, kAttracting, kRepelling, kParabolic, kIrrationallyIndifferent };
enum class FixedPointRole { kAlpha, kBeta };

std::string_view to_string(PointClass c);

inline constexpr int kRootOfUnityDenominatorCap = 64;
inline constexpr double kDefaultMultiplierTolerance = 1e-9;

PointClass classify_multiplier(Cx multiplier, double tol = kDefaultMultiplierTolerance);

struct FixedPointInfo {
  Cx location;
  Cx multiplier;
  PointClass cls;
  std::optional<FixedPointRole> role;
  int multiplicity = 1;
};

struct FixedPointSet {
  std::vector<FixedPointInfo> points;
  /// Set to kRoleUndetermined when the angle-0 ray could not be landed.
  std::optional<ErrorKind> role_error;

  const FixedPointInfo* find(FixedPointRole role) const;
};

/// All roots of z^l + c - z, merged by multiplicity and classified. For l = 2 the roles
/// alpha/beta are assigned (beta = landing point of the angle-0 ray); for l > 2 only beta.
FixedPointSet fixed_points(const UnicriticalMap& f);

/// Points of exact period p with the multiplier of f^p. Throws kDegreeTooLarge when l^p
/// exceeds kMaxPeriodicDegree.
inline constexpr std::size_t kMaxPeriodicDegree = 1024;
std::vector<FixedPointInfo> periodic_points(const UnicriticalMap& f, int p);

/// Simultaneous root finder (Aberth-Ehrlich) for a degree-n function given by a value and
/// derivative callback, followed by Newton polish. Exposed for testing.
template <class Eval>
std::vector<Cx> aberth_roots(Eval&& eval, std::size_t n, double radius, int max_iter = 500);

}  // namespace puzzlemeasure

#include "puzzlemeasure/detail/aberth.inl"
