#include <doctest.h>

#include <cmath>

#include "puzzlemeasure/lab.hpp"

using namespace puzzlemeasure;

namespace {

struct Fixture {
  PotentialField field;
  Puzzle puzzle;
  Partition partition;
  ConformalEstimate est;

  Fixture(Cx c, int depth)
      : field(UnicriticalMap(2, c)), puzzle(field), partition(build_partition(puzzle, depth)),
        est(estimate_conformal(partition, 1e-6)) {}
};

}  // namespace

TEST_SUITE("lab") {
  TEST_CASE("Koebe bound") {
    CHECK(koebe_bound(0.5) == doctest::Approx(81.0));
    CHECK(koebe_bound(0.0) == 1.0);
  }

  TEST_CASE("the Koebe function attains the bound") {
    // k(z) = z / (1 - z)^2, |k'(z)| = |1 + z| / |1 - z|^3
    auto dk = [](Cx z) -> std::optional<double> { return std::abs(1.0 + z) / std::pow(std::abs(1.0 - z), 3); };
    const auto r = koebe_check(dk, 0.0, 1.0, 0.5, true);
    CHECK(r.measured == doctest::Approx(81.0).epsilon(1e-9));
    CHECK(r.pass);
    CHECK_THROWS_AS(koebe_check(dk, 0.0, 1.0, 0.5, false), Error);
  }

  TEST_CASE("an affine map has no distortion") {
    auto d = [](Cx) -> std::optional<double> { return 3.0; };
    CHECK(koebe_check(d, Cx(1, 1), 0.2, 0.5, true).measured == 1.0);
  }

  TEST_CASE("inverse branch of z^2 is a square root") {
    UnicriticalMap f(2, 0.0);
    const Cx x(1.2, 0.4);
    const auto g = inverse_branch(f, x, 3);
    const Cx a = std::pow(x, 8);
    for (Cx w : {a, a * 1.01, a + Cx(0, 0.05)}) {
      const auto d = g(w);
      REQUIRE(d);
      // g(w) = w^(1/8) on the branch through x
      CHECK(*d == doctest::Approx(std::pow(std::abs(w), 1.0 / 8 - 1) / 8).epsilon(1e-9));
    }
  }

  TEST_CASE("entry branches of c = -2 pass Koebe") {
    Fixture f(-2.0, 6);
    const auto brs = sample_entry_branches(f.puzzle, *f.puzzle.critical_address(2), 40, 7);
    REQUIRE(brs.size() == 40);
    int certified = 0;
    for (const auto& b : brs) {
      CHECK(b.k >= 1);
      CHECK(b.radius > 0.0);
      if (!b.univalent) continue;
      ++certified;
      CHECK(koebe_check(f.puzzle, b, 0.5).pass);
    }
    CHECK(certified > 0);
  }

  TEST_CASE("density transport sweep") {
    Fixture f(Cx(0, 1), 6);
    const auto brs = sample_entry_branches(f.puzzle, *f.puzzle.critical_address(2), 60, 2);
    const auto checks = transport_sweep(f.partition, f.est.weights, f.est.delta, brs, 30, 4);
    CHECK(checks.size() == 30);
    for (const auto& t : checks) {
      CHECK(t.pass);
      CHECK(t.k_measured >= 1.0);
    }
  }

  TEST_CASE("A must be inside B") {
    Fixture f(-2.0, 4);
    AtomSet a(f.partition.size()), b(f.partition.size());
    a.insert(0);
    b.insert(1);
    CHECK_THROWS_AS(density_transport_check(f.partition, f.est.weights, f.est.delta, a, b, 1), Error);
  }

  TEST_CASE("image atoms of depth-n pieces") {
    Fixture f(-2.0, 5);
    const auto all = AtomSet(f.partition.size(), true);
    CHECK(image_atoms(f.partition, all, 1) == all);
    const auto crit = atoms_in(f.partition, *f.puzzle.critical_address(3));
    CHECK(crit.count() > 0);
    CHECK(crit.subset_of(atoms_in(f.partition, *f.puzzle.critical_address(2))));
  }

  TEST_CASE("avoidance: sampled curve tracks the exact recursion") {
    Fixture f(-2.0, 7);
    const auto u = atoms_in(f.partition, *f.puzzle.critical_address(3));
    const auto sampled = avoidance_curve(f.partition, f.est.weights, u, 60, 64, 3);
    const auto exact = avoidance_curve_exact(f.partition, f.est.weights, u, 60);
    CHECK(sampled[0] == doctest::Approx(1.0 - u.mass(f.est.weights)));
    CHECK(exact[0] == doctest::Approx(sampled[0]));
    for (int t : {5, 20, 60}) CHECK(std::abs(sampled[static_cast<std::size_t>(t)] - exact[static_cast<std::size_t>(t)]) < 0.05);
    for (std::size_t t = 1; t < sampled.size(); ++t) CHECK(sampled[t] <= sampled[t - 1]);
    // U = everything: nothing avoids it
    CHECK(avoidance_mass(f.partition, f.est.weights, AtomSet(f.partition.size(), true), 3) == 0.0);
    CHECK_THROWS_AS(avoidance_mass(f.partition, f.est.weights, AtomSet(f.partition.size()), 3), Error);
  }

  TEST_CASE("parabolic avoidance needs a parabolic point") {
    Fixture f(-2.0, 4);
    CHECK_THROWS_AS(parabolic_avoidance(f.partition, f.est.weights, 0.2, 10), Error);
  }

  TEST_CASE("weak density search and saturation") {
    Fixture f(Cx(0, 1), 6);
    const AtomSet x = atoms_in(f.partition, {0});
    const auto steps = weak_density_search(f.partition, f.est.weights, x, 0, 6);
    REQUIRE(steps.size() == 7);
    for (const auto& s : steps) CHECK(s.density >= 0.0);
    CHECK(steps.back().density == doctest::Approx(1.0));
    CHECK_THROWS_AS(weak_density_search(f.partition, f.est.weights, AtomSet(f.partition.size()), 0, 6), Error);
    const auto sat = saturate(f.partition, x, 5);
    CHECK(x.subset_of(sat));
  }

  TEST_CASE("lab nest falls back to critical pieces for c = i") {
    Puzzle p(PotentialField(UnicriticalMap(2, Cx(0, 1))));
    const auto nest = lab_nest(p, 5);
    REQUIRE(nest.size() == 5);
    for (int t = 0; t < 5; ++t) CHECK(nest[static_cast<std::size_t>(t)] == *p.critical_address(t));
  }
}
