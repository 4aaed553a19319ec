// Runs the ten acceptance criteria and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "puzzlemeasure/lab.hpp"
#include "puzzlemeasure/measure.hpp"
#include "puzzlemeasure/modulus.hpp"
#include "puzzlemeasure/nest.hpp"
#include "puzzlemeasure/pipeline.hpp"
#include "puzzlemeasure/potential.hpp"
#include "puzzlemeasure/puzzle.hpp"

using namespace puzzlemeasure;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Cx kFibonacci{-1.8705286321646448, 0.0};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// A map with its puzzle and one partition; the partition points into the puzzle.
struct Model {
  PotentialField field;
  std::unique_ptr<Puzzle> puzzle;
  Partition partition;
  ConformalEstimate est;

  Model(Cx c, int depth, double tol = 1e-6) : field(UnicriticalMap(2, c)) {
    puzzle = std::make_unique<Puzzle>(field);
    partition = build_partition(*puzzle, depth);
    est = estimate_conformal(partition, tol);
  }
};

std::map<std::string, std::unique_ptr<Model>> g_models;

Model& model(const std::string& key, Cx c, int depth) {
  auto& m = g_models[key];
  if (!m) m = std::make_unique<Model>(c, depth);
  return *m;
}

// 1 ------------------------------------------------------------------------
Outcome circle_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  PotentialField field(UnicriticalMap(2, 0.0));
  Puzzle puzzle(field);
  const auto part = build_partition(puzzle, 8);
  double worst = 0.0;
  for (int i = 1; i <= 50; ++i) {
    const double d = 0.04 * i;
    worst = std::max(worst, std::abs(pressure(part, d) - (1.0 - d) * std::log(2.0)));
  }
  const double delta = find_delta(part, 1e-6);
  const auto mu = eigenmeasure(part, delta);
  const std::vector<double> uniform(part.size(), 1.0 / static_cast<double>(part.size()));
  const double tv = total_variation(mu, uniform);
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && std::abs(delta - 1.0) <= 1e-3 && tv <= 1e-6 && t < 10.0,
          format("atoms=%zu max|P-(1-d)log2|=%.2e delta=%.6f tv=%.2e time=%.1fs", part.size(), worst, delta, tv, t)};
}

// 2 ------------------------------------------------------------------------
/// Length of the real trace t -> 2cos(2 pi t) of the angle interval (a, a + len).
double trace_length(double a, double len) {
  double lo = 2 * std::cos(2 * kPi * a), hi = lo;
  const double e = 2 * std::cos(2 * kPi * (a + len));
  lo = std::min(lo, e);
  hi = std::max(hi, e);
  for (double k = std::ceil(2 * a); k <= 2 * (a + len); k += 1.0) {
    const double x = 2 * std::cos(kPi * k);  // extremum at t = k / 2
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return hi - lo;
}

Outcome chebyshev_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> residuals;
  std::string detail;
  bool ok = true;
  for (int depth : {8, 9, 10}) {
    Model& m = model("cheb" + std::to_string(depth), -2.0, depth);
    ok = ok && std::abs(m.est.delta - 1.0) <= 2e-2;
    residuals.push_back(m.est.conformality_residual);
    detail += format("d%d: delta=%.4f res=%.2e ", depth, m.est.delta, m.est.conformality_residual);
    if (depth == 10) {
      const auto den = static_cast<double>(m.puzzle->denominator(depth));
      std::vector<double> len;
      double total = 0.0;
      for (const auto& atom : m.partition.atoms) {
        const auto& g = m.puzzle->piece(depth, atom.piece).gaps.front();
        len.push_back(trace_length(static_cast<double>(g.start) / den, static_cast<double>(g.length) / den));
        total += len.back();
      }
      for (double& x : len) x /= 4.0;
      const double tv = total_variation(m.est.weights, len);
      ok = ok && tv <= 5e-2;
      detail += format("tv(len/4)=%.3e sum(len)=%.6f ", tv, total);
    }
  }
  for (std::size_t i = 1; i < residuals.size(); ++i) ok = ok && residuals[i] < residuals[i - 1];
  ok = ok && residuals.back() <= 1e-2;
  const double t = seconds_since(t0);
  ok = ok && t < 60.0;
  return {ok, detail + format("time=%.1fs", t)};
}

// 3 ------------------------------------------------------------------------
Outcome puzzle_c_i() {
  PotentialField field(UnicriticalMap(2, Cx(0, 1)));
  Puzzle puzzle(field);
  const Cx alpha = fixed_points(field.map).find(FixedPointRole::kAlpha)->location;
  double worst_land = 0.0;
  for (auto a : {Angle::make(1, 7), Angle::make(2, 7), Angle::make(4, 7)}) {
    const auto tr = trace_ray(field, a, 4.0, 1e-9);
    worst_land = std::max(worst_land, std::abs(land_ray(tr.ray, 1e-4) - alpha));
  }
  // Markov: the depth-(n-1) piece of f(x) is the image of the depth-n piece of x
  std::size_t points = 0, good = 0;
  std::mt19937_64 rng(2024);
  const auto samples = random_angles_in(puzzle, {0}, 4000, 11);
  std::vector<SymbolicAngle> all(samples);
  for (int p : {1, 2}) {
    for (const auto& x : random_angles_in(puzzle, {p}, 3000, 11 + static_cast<std::uint64_t>(p))) all.push_back(x);
  }
  for (const auto& x : all) {
    ++points;
    bool ok = true;
    for (int n = 1; n <= 10; ++n) {
      ok = ok && Puzzle::image_of(puzzle.address_of(x, n)) == puzzle.address_of(x.shifted(1), n - 1);
    }
    good += ok ? 1 : 0;
  }
  // and numerically on the materialized puzzle: piece images through map_piece agree with the
  // depth-(n-1) piece met by f of a sample point
  puzzle.refine(10);
  std::size_t numeric = 0, numeric_good = 0;
  for (int n = 1; n <= 10; ++n) {
    const auto& lvl = puzzle.level(n);
    for (std::size_t i = 0; i < lvl.size(); i += std::max<std::size_t>(1, lvl.size() / 40)) {
      const Angle th = puzzle.interior_angle(lvl[i].address);
      const Cx z = ray_point(field, th, puzzle.potential_at(n) / 2);
      ++numeric;
      numeric_good += puzzle.locate(field.map.apply(z), n - 1) == puzzle.map_piece(n, lvl[i].id) ? 1 : 0;
    }
  }
  const auto nest = critical_nest(puzzle, 15);
  bool decreasing = true;
  for (int n = 6; n <= 15; ++n) decreasing = decreasing && nest[n].diameter < nest[n - 1].diameter;
  return {worst_land <= 1e-4 && points >= 10000 && good == points && numeric_good == numeric && decreasing,
          format("landing err=%.2e markov=%zu/%zu numeric=%zu/%zu diam(5..15) %s", worst_land, good, points,
                 numeric_good, numeric, decreasing ? "strictly decreasing" : "NOT decreasing")};
}

// 4 ------------------------------------------------------------------------
Outcome modulus_estimator() {
  std::string detail;
  bool ok = true;
  for (double ratio : {1.5, 2.0, 5.0, 10.0}) {
    std::vector<Cx> circle;
    for (int k = 0; k < 256; ++k) circle.push_back(ratio * std::polar(1.0, 2 * kPi * k / 256));
    const auto frame = frame_for(circle, 512);
    const auto m = annulus_modulus([ratio](Cx z) { return std::abs(z) < ratio; }, [](Cx z) { return std::abs(z) < 1.0; },
                                   frame);
    const double exact = round_annulus_modulus(1.0, ratio);
    const double err = std::abs(m.estimate - exact) / exact;
    ok = ok && err <= 0.05;
    detail += format("R/r=%g err=%.2f%% ", ratio, 100 * err);
  }
  // nesting: shrinking the annulus never increases the discrete modulus
  std::vector<Cx> box;
  for (int k = 0; k < 64; ++k) box.push_back(12.0 * std::polar(1.0, 2 * kPi * k / 64));
  const auto frame = frame_for(box, 256);
  int pairs = 0, monotone = 0;
  for (double r_in : {1.0, 1.5, 2.5}) {
    for (double r_out : {10.0, 7.0, 5.0}) {
      const auto big = annulus_modulus([](Cx z) { return std::abs(z) < 10.0; },
                                       [](Cx z) { return std::abs(z) < 1.0; }, frame);
      const auto small = annulus_modulus([r_out](Cx z) { return std::abs(z) < r_out && z.real() < 0.9 * r_out; },
                                         [r_in](Cx z) { return std::abs(z - Cx(0.1, 0.0)) < r_in; }, frame);
      ++pairs;
      monotone += small.estimate <= big.estimate ? 1 : 0;
    }
  }
  PotentialField field(UnicriticalMap(2, Cx(0, 1)));
  Puzzle puzzle(field);
  for (int t = 0; t < 4; ++t) {
    const auto outer_address = *puzzle.critical_address(t);
    int s = t + 1;
    while (!compactly_contained(puzzle, *puzzle.critical_address(s), outer_address)) ++s;
    const auto outer = puzzle.polygon(outer_address);
    const auto f = frame_for(outer, 192);
    const auto inner1 = puzzle.polygon(*puzzle.critical_address(s));
    const auto inner2 = puzzle.polygon(*puzzle.critical_address(s + 2));
    const auto m1 = annulus_modulus([&](Cx z) { return point_in_polygon(z, outer); },
                                    [&](Cx z) { return point_in_polygon(z, inner1); }, f);
    const auto m2 = annulus_modulus([&](Cx z) { return point_in_polygon(z, outer); },
                                    [&](Cx z) { return point_in_polygon(z, inner2); }, f);
    ++pairs;
    monotone += m1.estimate <= m2.estimate ? 1 : 0;
  }
  ok = ok && monotone == pairs;
  return {ok, detail + format("nesting monotone %d/%d", monotone, pairs)};
}

// 5 ------------------------------------------------------------------------
Outcome koebe_suite() {
  int certified = 0, failures = 0;
  double worst = 1.0;
  for (Cx c : {Cx(0, 1), Cx(-2, 0)}) {
    PotentialField field(UnicriticalMap(2, c));
    Puzzle puzzle(field);
    const auto branches = sample_entry_branches(puzzle, *puzzle.critical_address(2), 200, 3);
    for (std::size_t i = 0; i < branches.size(); ++i) {
      if (!branches[i].univalent) continue;
      const auto r = koebe_check(puzzle, branches[i], 0.5, static_cast<int>(i));
      ++certified;
      worst = std::max(worst, r.measured);
      failures += r.pass ? 0 : 1;
    }
  }
  return {certified >= 200 && failures == 0,
          format("certified=%d failures=%d worst=%.3f bound=%.0f", certified, failures, worst, koebe_bound(0.5))};
}

// 6 ------------------------------------------------------------------------
Outcome density_transport() {
  std::string detail;
  bool ok = true;
  for (auto [key, c] : {std::pair{"ci8", Cx(0, 1)}, std::pair{"cheb10", Cx(-2, 0)}}) {
    Model& m = model(key, c, key == std::string("ci8") ? 8 : 10);
    const auto branches = sample_entry_branches(*m.puzzle, *m.puzzle->critical_address(2), 200, 5);
    const auto checks = transport_sweep(m.partition, m.est.weights, m.est.delta, branches, 100, 9);
    int failures = 0;
    double k_max = 1.0;
    for (const auto& t : checks) {
      failures += t.pass ? 0 : 1;
      k_max = std::max(k_max, t.k_measured);
    }
    ok = ok && checks.size() == 100 && failures == 0;
    detail += format("%s: triples=%zu failures=%d K_max=%.3f ", key, checks.size(), failures, k_max);
  }
  return {ok, detail};
}

// 7 ------------------------------------------------------------------------
Outcome avoidance_decay() {
  auto nonincreasing = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] > v[i - 1]) return false;
    }
    return true;
  };
  Model& ci = model("ci8", Cx(0, 1), 8);
  const auto u = atoms_in(ci.partition, *ci.puzzle->critical_address(6));
  const auto a = avoidance_curve(ci.partition, ci.est.weights, u, 200);
  Model& para = model("quarter10", Cx(0.25, 0), 10);
  const auto b = parabolic_avoidance(para.partition, para.est.weights, 0.2, 500);
  return {nonincreasing(a) && a.back() <= 0.05 && nonincreasing(b) && b.back() <= 0.05,
          format("c=i: mu(U)=%.3f A(200)=%.2e; c=1/4: A(0)=%.3f A(500)=%.2e", u.mass(ci.est.weights), a.back(), b[0],
                 b.back())};
}

// 8 ------------------------------------------------------------------------
Outcome uniqueness() {
  std::string detail;
  bool ok = true;
  for (auto [key, c, depth] : {std::tuple{"circle8", Cx(0, 0), 8}, std::tuple{"cheb10", Cx(-2, 0), 10},
                               std::tuple{"ci8", Cx(0, 1), 8}}) {
    Model& m = model(key, c, depth);
    std::vector<std::vector<double>> runs;
    for (std::uint64_t seed = 101; seed <= 105; ++seed) runs.push_back(eigenmeasure(m.partition, m.est.delta, seed));
    double worst = 0.0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      for (std::size_t j = i + 1; j < runs.size(); ++j) worst = std::max(worst, total_variation(runs[i], runs[j]));
    }
    ok = ok && worst <= 1e-6;
    detail += format("%s tv=%.1e ", key, worst);
  }
  return {ok, detail};
}

// 9 ------------------------------------------------------------------------
/// Raw critical orbit f(0), f^2(0), ... up to `horizon` points, cut at the first revisit.
std::vector<Cx> raw_orbit(const UnicriticalMap& f, int horizon) {
  std::vector<Cx> out;
  Cx z = 0.0;
  for (int k = 1; k <= horizon; ++k) {
    z = f.apply(z);
    for (Cx w : out) {
      if (std::abs(w - z) < 1e-9) return out;
    }
    out.push_back(z);
  }
  return out;
}

/// Index k >= 1 of the first orbit point inside the polygon, 0 when none.
int scan_return(const std::vector<Cx>& orbit, const std::vector<Cx>& poly) {
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    if (point_in_polygon(orbit[i], poly)) return static_cast<int>(i) + 1;
  }
  return 0;
}

std::vector<int> rle(const std::vector<bool>& flags) {
  std::vector<int> runs;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (i == 0 || flags[i] != flags[i - 1]) runs.push_back(0);
    ++runs.back();
  }
  return runs;
}

Outcome nest_oracle() {
  constexpr int kTmax = 20;
  std::string detail;
  bool ok = true;

  // c = i: the critical point is not recurrent, the principal nest is empty and its stand-in is
  // the sequence of critical pieces Y^n(0), n < T_max
  {
    PotentialField field(UnicriticalMap(2, Cx(0, 1)));
    Puzzle puzzle(field);
    const auto orbit = raw_orbit(field.map, 1000);
    const SymbolicAngle zero = critical_point_angle(puzzle);
    bool impl_nonrecurrent = false;
    try {
      choose_V00(puzzle);
    } catch (const Error& e) {
      impl_nonrecurrent = e.kind() == ErrorKind::kNonRecurrent;
    }
    int mismatches = 0, returns = 0;
    std::vector<bool> flags_impl, flags_oracle;
    for (int n = 0; n < kTmax; ++n) {
      const auto v = *puzzle.critical_address(n);
      const int k_oracle = scan_return(orbit, puzzle.polygon(v));
      int k_impl = 0;
      try {
        k_impl = first_return_time(puzzle, zero, v);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNoReturnWithinHorizon) throw;
      }
      mismatches += k_impl != k_oracle ? 1 : 0;
      if (k_oracle == 0) continue;
      ++returns;
      const bool c_oracle =
          point_in_polygon(orbit[static_cast<std::size_t>(k_oracle - 1)], puzzle.polygon(*puzzle.critical_address(n + 1)));
      flags_oracle.push_back(c_oracle);
      if (k_impl > 0) flags_impl.push_back(puzzle.address_of(zero.shifted(k_impl), n + 1) == *puzzle.critical_address(n + 1));
    }
    const bool oracle_nonrecurrent = scan_return(orbit, puzzle.polygon(*puzzle.critical_address(kTmax))) == 0;
    const auto summary = detect_cascades(flags_impl);
    const bool enc = summary.runs == rle(flags_oracle) && decode_cascades(summary) == flags_oracle;
    ok = ok && impl_nonrecurrent == oracle_nonrecurrent && mismatches == 0 && flags_impl == flags_oracle && enc &&
         !summary.renormalizable;
    detail += format("c=i: nonrecurrent impl=%d oracle=%d, return-time mismatches=%d over n<%d (%d returns), flags %s, "
                     "cascades %s; ",
                     impl_nonrecurrent, oracle_nonrecurrent, mismatches, kTmax, returns,
                     flags_impl == flags_oracle ? "match" : "DIFFER", enc ? "match" : "DIFFER");
  }

  // Fibonacci parameter: the principal nest itself, as deep as the symbolic puzzle resolves it
  {
    PotentialField field(UnicriticalMap(2, kFibonacci));
    Puzzle puzzle(field);
    const auto orbit = raw_orbit(field.map, 200);
    const auto v00 = choose_V00(puzzle);
    const auto nest = principal_nest(puzzle, v00.address, kTmax);
    int mismatches = 0;
    std::vector<bool> flags_impl, flags_oracle;
    for (const auto& lv : nest.levels) {
      const int depth = static_cast<int>(lv.piece.size()) - 1;
      const int k = scan_return(orbit, puzzle.polygon(lv.piece));
      bool central = false;
      if (k > 0) {
        central = point_in_polygon(orbit[static_cast<std::size_t>(k - 1)],
                                   puzzle.polygon(*puzzle.critical_address(depth + k)));
      }
      mismatches += (k != lv.return_time || central != lv.central) ? 1 : 0;
      flags_impl.push_back(lv.central);
      flags_oracle.push_back(central);
    }
    const auto summary = detect_cascades(flags_impl);
    const bool enc = summary.runs == rle(flags_oracle);
    ok = ok && mismatches == 0 && enc && !nest.levels.empty();
    std::string times;
    for (const auto& lv : nest.levels) times += std::to_string(lv.return_time) + (lv.central ? "c " : "n ");
    detail += format("Fibonacci: %zu levels [%s] mismatches=%d cascades %s, stop=%s", nest.levels.size(),
                     times.c_str(), mismatches, enc ? "match" : "DIFFER",
                     nest.stop ? std::string(to_string(*nest.stop)).c_str() : "none");
  }
  return {ok, detail};
}

// 10 -----------------------------------------------------------------------
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto base = std::filesystem::temp_directory_path() / "puzzlemeasure_acceptance";
  RunConfig cfg;
  cfg.c = Cx(0, 1);
  cfg.has_c = true;
  cfg.partition_depth = 6;
  cfg.seed = 42;
  cfg.figures = false;
  cfg.output_dir = (base / "a").string();
  cmd_measure(cfg);
  cfg.output_dir = (base / "b").string();
  cmd_measure(cfg);
  bool same = true;
  std::size_t bytes = 0;
  for (const char* name : {"measure.json", "atoms.csv"}) {
    const auto a = slurp(base / "a" / name);
    const auto b = slurp(base / "b" / name);
    same = same && !a.empty() && a == b;
    bytes += a.size();
  }
  std::filesystem::remove_all(base);
  return {same, format("two runs, %zu bytes compared, %s", bytes, same ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"circle oracle", circle_oracle},         {"chebyshev oracle", chebyshev_oracle},
      {"puzzle for c=i", puzzle_c_i},           {"modulus estimator", modulus_estimator},
      {"koebe suite", koebe_suite},             {"density transport", density_transport},
      {"avoidance decay", avoidance_decay},     {"uniqueness probe", uniqueness},
      {"nest oracle", nest_oracle},             {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %-18s [%5.1fs] %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, seconds_since(t0),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
