#include <doctest.h>

#include <cmath>
#include <sstream>

#include "puzzlemeasure/measure.hpp"

using namespace puzzlemeasure;

namespace {

struct Fixture {
  PotentialField field;
  Puzzle puzzle;
  Partition partition;

  Fixture(Cx c, int depth) : field(UnicriticalMap(2, c)), puzzle(field), partition(build_partition(puzzle, depth)) {}
};

}  // namespace

TEST_SUITE("measure") {
  TEST_CASE("circle: pressure is (1 - delta) log 2") {
    Fixture f(0.0, 6);
    CHECK(f.partition.size() == 64);
    for (double d : {0.0, 0.5, 1.0, 1.7}) CHECK(pressure(f.partition, d) == doctest::Approx((1 - d) * std::log(2.0)).epsilon(1e-8));
    CHECK(find_delta(f.partition, 1e-8) == doctest::Approx(1.0).epsilon(1e-6));
    const auto mu = eigenmeasure(f.partition, 1.0);
    for (double w : mu) CHECK(w == doctest::Approx(1.0 / 64));
  }

  TEST_CASE("every atom has l preimages and the rows of M at delta = 0 sum to l") {
    Fixture f(Cx(0, 1), 5);
    const auto m = transfer_matrix(f.partition, 0.0);
    for (double s : m.row_sums()) CHECK(s == 2.0);
    CHECK(pressure(f.partition, 0.0) == doctest::Approx(std::log(2.0)));
    for (std::size_t a = 0; a < f.partition.size(); ++a) {
      for (const auto& b : f.partition.branches[a]) {
        // the branch lands in an atom whose image contains the sample's atom
        const auto& atom = f.partition.atoms[static_cast<std::size_t>(b.atom)];
        CHECK(Puzzle::image_of(atom.address) == f.puzzle.parent_of(f.partition.atoms[a].address));
      }
    }
  }

  TEST_CASE("transfer matrix transpose is consistent") {
    Fixture f(-2.0, 6);
    const auto m = transfer_matrix(f.partition, 0.8);
    for (std::size_t r = 0; r < m.n; ++r) {
      for (auto q = m.row_ptr[r]; q < m.row_ptr[r + 1]; ++q) CHECK(m.entry(r, m.col[q]) > 0.0);
    }
    double s = 0.0, t = 0.0;
    for (double v : m.val) s += v;
    for (double v : m.t_val) t += v;
    CHECK(s == doctest::Approx(t));
  }

  TEST_CASE("power iteration: left and right eigenvalues agree, seeds agree") {
    Fixture f(-2.0, 7);
    const auto m = transfer_matrix(f.partition, 1.0);
    const auto l = power_iteration(m, true);
    const auto r = power_iteration(m, false);
    CHECK(l.eigenvalue == doctest::Approx(r.eigenvalue).epsilon(1e-9));
    const auto l2 = power_iteration(m, true, 12345);
    CHECK(total_variation(l.vector, l2.vector) < 1e-8);
    double mass = 0.0;
    for (double w : l.vector) {
      CHECK(w > 0.0);
      mass += w;
    }
    CHECK(mass == doctest::Approx(1.0));
  }

  TEST_CASE("Chebyshev: delta near 1 and small conformality defect") {
    Fixture f(-2.0, 8);
    const auto est = estimate_conformal(f.partition, 1e-6);
    CHECK(std::abs(est.delta - 1.0) < 2e-2);
    CHECK(est.conformality_residual < 1e-3);
    CHECK(std::abs(est.pressure_residual) < 1e-5);
    const auto d = conformality_defect(f.partition, est.weights, est.delta);
    CHECK(d.absolute == doctest::Approx(est.conformality_residual));
  }

  TEST_CASE("find_delta needs a sign change") {
    Fixture f(0.0, 4);
    CHECK_NOTHROW(find_delta(f.partition));
  }

  TEST_CASE("atom sets and densities") {
    AtomSet a(5), b(5);
    a.insert(1);
    a.insert(2);
    b.insert(2);
    b.insert(3);
    CHECK(a.count() == 2);
    CHECK(a.intersect(b).count() == 1);
    CHECK(a.unite(b).count() == 3);
    CHECK(a.complement().count() == 3);
    CHECK_FALSE(a.subset_of(b));
    CHECK(a.intersect(b).subset_of(b));
    const std::vector<double> w{0.1, 0.2, 0.3, 0.15, 0.25};
    CHECK(a.mass(w) == doctest::Approx(0.5));
    CHECK(density(a, b, w) == doctest::Approx(0.3 / 0.45));
    CHECK(density(a, b, w) + density(a.complement(), b, w) == doctest::Approx(1.0));
    CHECK_THROWS_AS(density(a, AtomSet(5), w), Error);
  }

  TEST_CASE("total variation") {
    CHECK(total_variation({0.5, 0.5}, {1.0, 0.0}) == doctest::Approx(0.5));
    CHECK(total_variation({0.2, 0.8}, {0.2, 0.8}) == 0.0);
    CHECK_THROWS_AS(total_variation({1.0}, {0.5, 0.5}), Error);
  }

  TEST_CASE("partition CSV") {
    Fixture f(0.0, 3);
    const auto est = estimate_conformal(f.partition);
    std::ostringstream out;
    write_partition_csv(out, f.partition, est);
    const auto s = out.str();
    CHECK(s.rfind("atom_id,depth,address,weight,df_delta,image_atom_ids\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 9);
  }

  TEST_CASE("depth must be positive") {
    PotentialField field(UnicriticalMap(2, 0.0));
    Puzzle p(field);
    CHECK_THROWS_AS(build_partition(p, 0), Error);
  }
}
