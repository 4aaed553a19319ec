#include "puzzlemeasure/angle.hpp"

#include <numeric>
#include <unordered_map>

#include "puzzlemeasure/error.hpp"

namespace puzzlemeasure {

namespace {

using i128 = __int128;

constexpr std::int64_t kMaxDenominator = std::int64_t{1} << 62;

std::int64_t mod_pow(std::int64_t base, int exp, std::int64_t mod) {
  i128 result = 1 % mod;
  i128 b = base % mod;
  while (exp > 0) {
    if (exp & 1) result = result * b % mod;
    b = b * b % mod;
    exp >>= 1;
  }
  return static_cast<std::int64_t>(result);
}

}  // namespace

Angle Angle::make(std::int64_t num, std::int64_t den) {
  if (den <= 0 || den >= kMaxDenominator) {
    throw Error(ErrorKind::kInvalidArgument, "angle denominator out of range");
  }
  num %= den;
  if (num < 0) num += den;
  const std::int64_t g = std::gcd(num, den);
  return Angle{num / g, den / g};
}

Angle Angle::times(int l) const {
  const i128 n = static_cast<i128>(num) * l % den;
  return make(static_cast<std::int64_t>(n), den);
}

Angle Angle::times_power(int l, int m) const {
  const i128 n = static_cast<i128>(num) * mod_pow(l, m, den) % den;
  return make(static_cast<std::int64_t>(n), den);
}

std::vector<Angle> Angle::preimages(int l) const {
  if (static_cast<i128>(den) * l >= kMaxDenominator) {
    throw Error(ErrorKind::kInvalidArgument, "preimage denominator overflow");
  }
  std::vector<Angle> out;
  out.reserve(static_cast<std::size_t>(l));
  for (int j = 0; j < l; ++j) out.push_back(make(num + static_cast<std::int64_t>(j) * den, den * l));
  return out;
}

double Angle::power_fraction(int l, int m) const {
  const Angle a = times_power(l, m);
  return static_cast<double>(a.value());
}

std::strong_ordering operator<=>(const Angle& a, const Angle& b) {
  const i128 lhs = static_cast<i128>(a.num) * b.den;
  const i128 rhs = static_cast<i128>(b.num) * a.den;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string to_string(const Angle& a) { return std::to_string(a.num) + "/" + std::to_string(a.den); }

AnglePeriod angle_period(const Angle& theta, int l, int cap) {
  std::unordered_map<std::int64_t, int> seen;  // numerators over the fixed denominator
  Angle current = theta;
  for (int k = 0; k < cap; ++k) {
    // Multiplying by l never grows the reduced denominator, so comparing over the original
    // denominator is exact.
    const std::int64_t key = static_cast<std::int64_t>(static_cast<i128>(current.num) * (theta.den / current.den));
    auto [it, inserted] = seen.emplace(key, k);
    if (!inserted) return AnglePeriod{it->second, k - it->second};
    current = current.times(l);
  }
  throw Error(ErrorKind::kInvalidArgument, "angle period exceeds cap");
}

bool in_open_arc(const Angle& theta, const Angle& a, const Angle& b) {
  if (a < b) return a < theta && theta < b;
  if (b < a) return theta > a || theta < b;
  return theta != a;  // full circle minus a point
}

}  // namespace puzzlemeasure
