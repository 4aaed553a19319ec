#include <doctest.h>

#include <random>

#include "puzzlemeasure/angle.hpp"
#include "puzzlemeasure/error.hpp"
#include "puzzlemeasure/symbolic_angle.hpp"

using namespace puzzlemeasure;

TEST_SUITE("angle") {
  TEST_CASE("angles are reduced into [0, 1)") {
    CHECK(Angle::make(2, 4) == Angle::make(1, 2));
    CHECK(Angle::make(9, 7) == Angle::make(2, 7));
    CHECK(Angle::make(-1, 3) == Angle::make(2, 3));
    CHECK(to_string(Angle::make(3, 6)) == "1/2");
  }

  TEST_CASE("doubling orbit of 1/7") {
    const Angle a = Angle::make(1, 7);
    CHECK(a.times(2) == Angle::make(2, 7));
    CHECK(a.times(2).times(2) == Angle::make(4, 7));
    CHECK(a.times_power(2, 3) == a);
    const auto p = angle_period(a, 2);
    CHECK(p.preperiod == 0);
    CHECK(p.period == 3);
  }

  TEST_CASE("preperiodic angle 1/6 lands on the 2-cycle 1/3, 2/3") {
    const auto p = angle_period(Angle::make(1, 6), 2);
    CHECK(p.preperiod == 1);
    CHECK(p.period == 2);
  }

  TEST_CASE("preimages invert times") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
      const int l = 2 + 2 * static_cast<int>(rng() % 3);
      const Angle a = Angle::make(static_cast<std::int64_t>(rng() % 1000), 1001 + static_cast<std::int64_t>(rng() % 500));
      const auto pre = a.preimages(l);
      REQUIRE(pre.size() == static_cast<std::size_t>(l));
      for (std::size_t j = 0; j < pre.size(); ++j) {
        CHECK(pre[j].times(l) == a);
        if (j > 0) CHECK(pre[j - 1] < pre[j]);
      }
    }
  }

  TEST_CASE("power_fraction agrees with times_power") {
    const Angle a = Angle::make(5, 123457);
    for (int m = 0; m < 40; ++m) CHECK(a.power_fraction(2, m) == doctest::Approx(static_cast<double>(a.times_power(2, m).value())));
  }

  TEST_CASE("open arcs wrap through zero") {
    CHECK(in_open_arc(Angle::make(1, 10), Angle::make(9, 10), Angle::make(1, 5)));
    CHECK_FALSE(in_open_arc(Angle::make(1, 2), Angle::make(9, 10), Angle::make(1, 5)));
    CHECK_FALSE(in_open_arc(Angle::make(1, 5), Angle::make(9, 10), Angle::make(1, 5)));
  }

  TEST_CASE("symbolic angles") {
    const auto x = SymbolicAngle::exact(Angle::make(1, 7), 2);
    CHECK(x.compare(Angle::make(1, 8)) == 1);
    CHECK(x.compare(Angle::make(1, 7)) == 0);
    CHECK(x.shifted(1).exact_value() == Angle::make(2, 7));
    CHECK(x.preimage(1).exact_value() == Angle::make(4, 7));

    // 0.001001001... in binary is 1/7
    std::vector<std::uint8_t> d;
    for (int i = 0; i < 60; ++i) d.push_back(i % 3 == 2 ? 1 : 0);
    const auto s = SymbolicAngle::digits(d, 2);
    CHECK(s.approx() == doctest::Approx(1.0 / 7));
    CHECK(s.compare(Angle::make(1, 8)) == 1);
    CHECK(s.compare(Angle::make(1, 6)) == -1);
    CHECK_THROWS_AS(s.compare(Angle::make(1, 7)), Error);  // equal up to every digit
    CHECK(s.leading_digit() == 0);
    CHECK(s.shifted(2).leading_digit() == 1);
    CHECK_THROWS_AS(SymbolicAngle::digits({2}, 2), Error);

    const auto a = SymbolicAngle::approximate(0.3, 1e-12, 2);
    CHECK(a.compare(Angle::make(1, 4)) == 1);
    CHECK(a.shifted(1).approx() == doctest::Approx(0.6));
  }
}
