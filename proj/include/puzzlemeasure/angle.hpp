#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace puzzlemeasure {

/// A rational external angle num/den in [0, 1), always reduced.
/// Denominators are kept below 2^62 so products with l fit in 128-bit intermediates.
struct Angle {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Angle make(std::int64_t num, std::int64_t den);

  /// l * theta mod 1, exact.
  Angle times(int l) const;
  /// l^m * theta mod 1, exact (modular exponentiation).
  Angle times_power(int l, int m) const;
  /// The l solutions of l * x = theta mod 1, ascending.
  std::vector<Angle> preimages(int l) const;

  long double value() const { return static_cast<long double>(num) / static_cast<long double>(den); }
  /// Fractional part of l^m * theta as a double, without overflow.
  double power_fraction(int l, int m) const;

  friend bool operator==(const Angle&, const Angle&) = default;
  friend std::strong_ordering operator<=>(const Angle& a, const Angle& b);
};

std::string to_string(const Angle& a);

struct AnglePeriod {
  int preperiod = 0;
  int period = 0;
};

/// Preperiod and period of theta under multiplication by l.
AnglePeriod angle_period(const Angle& theta, int l, int cap = 1 << 20);

/// Exact cyclic containment of theta in the open arc (a, b) travelled counterclockwise.
bool in_open_arc(const Angle& theta, const Angle& a, const Angle& b);

}  // namespace puzzlemeasure
