#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "puzzlemeasure/potential.hpp"

using namespace puzzlemeasure;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

/// c = -2: z = w + 1/w conjugates the exterior of [-2, 2] to |w| > 1.
Cx chebyshev_ray(double theta, double g) { return std::polar(std::exp(g), kTwoPi * theta) + std::polar(std::exp(-g), -kTwoPi * theta); }

}  // namespace

TEST_SUITE("potential") {
  TEST_CASE("Green function of z^2 is log|z|") {
    PotentialField field(UnicriticalMap(2, 0.0));
    for (Cx z : {Cx(2, 0), Cx(0.3, 1.5), Cx(-1.1, 0.2)}) {
      const auto g = green(field, z);
      CHECK(g.escaped);
      CHECK(g.value == doctest::Approx(std::log(std::abs(z))).epsilon(1e-10));
    }
    CHECK_FALSE(green(field, Cx(0.5, 0.5)).escaped);
  }

  TEST_CASE("Green function of the Chebyshev map") {
    PotentialField field(UnicriticalMap(2, -2.0));
    for (double g : {0.05, 0.3, 1.0}) {
      const Cx z = chebyshev_ray(0.17, g);
      CHECK(green(field, z).value == doctest::Approx(g).epsilon(1e-9));
    }
  }

  TEST_CASE("rays of z^2 are radial") {
    PotentialField field(UnicriticalMap(2, 0.0));
    for (double th : {0.0, 0.1, 3.0 / 7}) {
      const Cx z = ray_point(field, Angle::make(static_cast<std::int64_t>(std::lround(th * 7000)), 7000), 0.01);
      CHECK(std::abs(z - std::polar(std::exp(0.01), kTwoPi * std::lround(th * 7000) / 7000.0)) < 1e-9);
    }
  }

  TEST_CASE("rays of the Chebyshev map match the Joukowski oracle") {
    PotentialField field(UnicriticalMap(2, -2.0));
    for (auto a : {Angle::make(1, 5), Angle::make(3, 7), Angle::make(5, 12)}) {
      for (double g : {1e-3, 0.1}) {
        CHECK(std::abs(ray_point(field, a, g) - chebyshev_ray(static_cast<double>(a.value()), g)) < 1e-8);
      }
    }
  }

  TEST_CASE("external angle inverts ray_point") {
    PotentialField field(UnicriticalMap(2, Cx(0, 1)));
    for (auto a : {Angle::make(1, 7), Angle::make(5, 11), Angle::make(2, 3)}) {
      const Cx z = ray_point(field, a, 0.05);
      double t = external_angle(field, z);
      CHECK(std::remainder(t - static_cast<double>(a.value()), 1.0) == doctest::Approx(0.0).epsilon(1e-9));
    }
    CHECK_THROWS_AS(external_angle(field, 0.0), Error);
  }

  TEST_CASE("alpha rays") {
    SUBCASE("c = i: 1/7, 2/7, 4/7") {
      const auto ar = rays_at_alpha(PotentialField(UnicriticalMap(2, Cx(0, 1))));
      CHECK(ar.q == 3);
      REQUIRE(ar.angles.size() == 3);
      CHECK(ar.angles[0] == Angle::make(1, 7));
      CHECK(ar.angles[1] == Angle::make(2, 7));
      CHECK(ar.angles[2] == Angle::make(4, 7));
    }
    SUBCASE("c = -1: 1/3, 2/3") {
      const auto ar = rays_at_alpha(PotentialField(UnicriticalMap(2, -1.0)));
      REQUIRE(ar.angles.size() == 2);
      CHECK(ar.angles[0] == Angle::make(1, 3));
      CHECK(std::abs(ar.alpha - (1.0 - std::sqrt(5.0)) / 2.0) < 1e-9);
    }
    SUBCASE("c = 1/4 has no dividing fixed point") {
      CHECK_THROWS_AS(rays_at_alpha(PotentialField(UnicriticalMap(2, 0.25))), Error);
    }
  }

  TEST_CASE("ray 1/2 of the Chebyshev map lands at c = -2") {
    PotentialField field(UnicriticalMap(2, -2.0));
    // the ray meets c at distance ~ g^2, so stop while that is still resolvable
    const auto tr = trace_ray(field, Angle::make(1, 2), 2.0, 1e-6);
    CHECK_FALSE(tr.error);
    for (std::size_t i = 1; i < tr.ray.points.size(); ++i) CHECK(tr.ray.points[i].potential < tr.ray.points[i - 1].potential);
    CHECK(std::abs(land_ray(tr.ray, 1e-4) - Cx(-2, 0)) < 1e-4);
  }

  TEST_CASE("equipotential of z^2 is a circle") {
    const auto pts = equipotential(PotentialField(UnicriticalMap(2, 0.0)), 0.5, 32);
    REQUIRE(pts.size() == 32);
    for (Cx z : pts) CHECK(std::abs(z) == doctest::Approx(std::exp(0.5)));
  }

  TEST_CASE("ray CSV") {
    PotentialField field(UnicriticalMap(2, 0.0));
    std::vector<ExternalRay> rays{trace_ray(field, Angle::make(1, 3), 1.0, 0.5).ray};
    std::ostringstream out;
    write_rays_csv(out, rays);
    CHECK(out.str().rfind("angle_num,angle_den,potential,re,im\n1,3,", 0) == 0);
  }
}
