#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "puzzlemeasure/angle.hpp"

namespace puzzlemeasure {

/// An external angle known either exactly (rational), to a fixed absolute precision
/// (long double plus uncertainty), or as a finite base-l digit prefix. Only the dynamics
/// theta -> l*theta and comparison against rationals are offered.
class SymbolicAngle {
 public:
  static SymbolicAngle exact(const Angle& a, int degree);
  static SymbolicAngle approximate(long double value, long double uncertainty, int degree);
  /// Digits d_1 d_2 ... in base `degree`; comparisons that need more digits throw.
  static SymbolicAngle digits(std::vector<std::uint8_t> digits, int degree);

  int degree() const noexcept { return degree_; }
  bool is_exact() const noexcept { return kind_ == Kind::kExact; }
  const Angle& exact_value() const { return exact_; }
  long double approx() const;

  /// l^k * theta mod 1.
  SymbolicAngle shifted(int k = 1) const;
  /// (theta + j) / l.
  SymbolicAngle preimage(int j) const;

  /// Sign of theta - a on [0, 1). Throws kOnBoundary when the known precision cannot
  /// separate them and kAddressUnderflow when the precision is exhausted altogether.
  int compare(const Angle& a) const;

  /// First digit floor(l * theta).
  int leading_digit() const;

 private:
  enum class Kind { kExact, kApprox, kDigits };

  Kind kind_ = Kind::kExact;
  int degree_ = 2;
  Angle exact_;
  long double value_ = 0.0L;
  long double uncertainty_ = 0.0L;
  std::shared_ptr<const std::vector<std::uint8_t>> digits_;
  std::size_t offset_ = 0;
};

}  // namespace puzzlemeasure
