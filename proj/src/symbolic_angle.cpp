#include "puzzlemeasure/symbolic_angle.hpp"

#include <cmath>

#include "puzzlemeasure/error.hpp"

namespace puzzlemeasure {

namespace {

using i128 = __int128;

constexpr long double kExhausted = 1e-3L;

}  // namespace

SymbolicAngle SymbolicAngle::exact(const Angle& a, int degree) {
  SymbolicAngle s;
  s.kind_ = Kind::kExact;
  s.degree_ = degree;
  s.exact_ = a;
  return s;
}

SymbolicAngle SymbolicAngle::approximate(long double value, long double uncertainty, int degree) {
  SymbolicAngle s;
  s.kind_ = Kind::kApprox;
  s.degree_ = degree;
  s.value_ = value - std::floor(value);
  s.uncertainty_ = uncertainty;
  return s;
}

SymbolicAngle SymbolicAngle::digits(std::vector<std::uint8_t> digits, int degree) {
  for (auto d : digits) {
    if (d >= degree) throw Error(ErrorKind::kInvalidArgument, "digit out of range for the base");
  }
  SymbolicAngle s;
  s.kind_ = Kind::kDigits;
  s.degree_ = degree;
  s.digits_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(digits));
  return s;
}

long double SymbolicAngle::approx() const {
  switch (kind_) {
    case Kind::kExact: return exact_.value();
    case Kind::kApprox: return value_;
    case Kind::kDigits: {
      long double v = 0.0L;
      long double scale = 1.0L;
      for (std::size_t i = offset_; i < digits_->size() && i < offset_ + 40; ++i) {
        scale /= degree_;
        v += (*digits_)[i] * scale;
      }
      return v;
    }
  }
  return 0.0L;
}

SymbolicAngle SymbolicAngle::shifted(int k) const {
  SymbolicAngle s = *this;
  switch (kind_) {
    case Kind::kExact: s.exact_ = exact_.times_power(degree_, k); break;
    case Kind::kApprox:
      for (int i = 0; i < k; ++i) {
        s.value_ *= degree_;
        s.value_ -= std::floor(s.value_);
        s.uncertainty_ *= degree_;
      }
      break;
    case Kind::kDigits: s.offset_ += static_cast<std::size_t>(k); break;
  }
  return s;
}

SymbolicAngle SymbolicAngle::preimage(int j) const {
  SymbolicAngle s = *this;
  switch (kind_) {
    case Kind::kExact: s.exact_ = exact_.preimages(degree_)[static_cast<std::size_t>(j)]; break;
    case Kind::kApprox:
      s.value_ = (value_ + j) / degree_;
      s.uncertainty_ = uncertainty_ / degree_;
      break;
    case Kind::kDigits: {
      std::vector<std::uint8_t> d;
      d.reserve(digits_->size() - offset_ + 1);
      d.push_back(static_cast<std::uint8_t>(j));
      d.insert(d.end(), digits_->begin() + static_cast<std::ptrdiff_t>(offset_), digits_->end());
      s.digits_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(d));
      s.offset_ = 0;
      break;
    }
  }
  return s;
}

int SymbolicAngle::compare(const Angle& a) const {
  switch (kind_) {
    case Kind::kExact: {
      const auto ord = exact_ <=> a;
      return ord < 0 ? -1 : (ord > 0 ? 1 : 0);
    }
    case Kind::kApprox: {
      if (uncertainty_ >= kExhausted) throw Error(ErrorKind::kAddressUnderflow, "angle precision exhausted");
      const long double d = value_ - a.value();
      if (std::fabs(d) <= uncertainty_) throw Error(ErrorKind::kOnBoundary, "angle within its uncertainty of " + to_string(a));
      return d < 0 ? -1 : 1;
    }
    case Kind::kDigits: {
      i128 r = a.num;
      for (std::size_t i = offset_; i < digits_->size(); ++i) {
        r *= degree_;
        const int da = static_cast<int>(r / a.den);
        r %= a.den;
        const int ds = (*digits_)[i];
        if (ds != da) return ds < da ? -1 : 1;
      }
      throw Error(ErrorKind::kAddressUnderflow, "digit stream exhausted against " + to_string(a));
    }
  }
  return 0;
}

int SymbolicAngle::leading_digit() const {
  switch (kind_) {
    case Kind::kExact: return static_cast<int>(static_cast<i128>(exact_.num) * degree_ / exact_.den);
    case Kind::kApprox: {
      int d = 0;
      for (int k = 1; k < degree_; ++k) {
        if (compare(Angle::make(k, degree_)) >= 0) d = k;
      }
      return d;
    }
    case Kind::kDigits:
      if (offset_ >= digits_->size()) throw Error(ErrorKind::kAddressUnderflow, "digit stream exhausted");
      return (*digits_)[offset_];
  }
  return 0;
}

}  // namespace puzzlemeasure
