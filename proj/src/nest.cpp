#include "puzzlemeasure/nest.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace puzzlemeasure {

namespace {

using i128 = __int128;

int depth_of(const Address& a) { return static_cast<int>(a.size()) - 1; }

bool in_piece(const Puzzle& puzzle, const SymbolicAngle& x, const Address& v) {
  return puzzle.address_of(x, depth_of(v)) == v;
}

std::set<Angle> boundary_angles(const Puzzle& puzzle, const Address& a) {
  const std::int64_t d = puzzle.denominator(depth_of(a));
  std::set<Angle> out;
  for (const auto& g : puzzle.gaps_of(a)) {
    out.insert(Angle::make(g.start, d));
    out.insert(Angle::make(g.start + g.length, d));
  }
  return out;
}

}  // namespace

int first_return_time(const UnicriticalMap& f, Cx x, const std::function<bool(Cx)>& in_v, int horizon) {
  if (!in_v(x)) throw Error(ErrorKind::kInvalidArgument, "start point is not in V");
  Cx z = x;
  for (int k = 1; k <= horizon; ++k) {
    z = evaluate(f, z);
    if (in_v(z)) return k;
  }
  throw Error(ErrorKind::kNoReturnWithinHorizon, "no return within the horizon");
}

int first_return_time(const Puzzle& puzzle, const SymbolicAngle& x, const Address& v, int horizon) {
  if (!in_piece(puzzle, x, v)) throw Error(ErrorKind::kInvalidArgument, "start point is not in V");
  int limit = horizon;
  if (x.is_exact()) {
    // An eventually periodic angle visits only finitely many points.
    try {
      const auto p = angle_period(x.exact_value(), puzzle.degree(), horizon + 1);
      limit = std::min(horizon, p.preperiod + p.period);
    } catch (const Error&) {
    }
  }
  SymbolicAngle y = x;
  for (int k = 1; k <= limit; ++k) {
    y = y.shifted(1);
    if (in_piece(puzzle, y, v)) return k;
  }
  throw Error(ErrorKind::kNoReturnWithinHorizon, "no return within the horizon");
}

SymbolicAngle critical_point_angle(const Puzzle& puzzle) {
  const auto tc = puzzle.critical_value_angle();
  if (!tc) throw Error(ErrorKind::kInvalidArgument, "the critical point has no angle without a dividing fixed point");
  return tc->preimage(0);
}

PullBack pull_back(const Puzzle& puzzle, const Address& p, const SymbolicAngle& x, int k) {
  if (k < 0) throw Error(ErrorKind::kInvalidArgument, "negative pull-back length");
  const int d = depth_of(p);
  if (d + k > puzzle.depth_limit()) throw Error(ErrorKind::kAddressUnderflow, "pull-back deeper than the puzzle");
  PullBack out;
  out.chain.resize(static_cast<std::size_t>(k) + 1);
  SymbolicAngle y = x;
  for (int i = 0; i <= k; ++i) {
    out.chain[static_cast<std::size_t>(i)] = puzzle.address_of(y, d + k - i);
    y = y.shifted(1);
  }
  if (out.chain.back() != p) throw Error(ErrorKind::kInvalidArgument, "f^k(x) is not in the target piece");
  for (int i = 0; i < k; ++i) {
    if (puzzle.is_critical(out.chain[static_cast<std::size_t>(i)])) out.univalent = false;
  }
  out.piece = out.chain.front();
  return out;
}

bool compactly_contained(const Puzzle& puzzle, const Address& inner, const Address& outer) {
  if (inner.size() <= outer.size()) return false;
  const auto outer_angles = boundary_angles(puzzle, outer);
  for (const auto& b : boundary_angles(puzzle, inner)) {
    for (const auto& s : puzzle.star_of(b, depth_of(inner))) {
      if (outer_angles.count(s)) return false;
    }
  }
  return true;
}

V00Choice choose_V00(const Puzzle& puzzle, int horizon, double gap_min_rel) {
  const SymbolicAngle zero = critical_point_angle(puzzle);
  for (int n = 0; n <= puzzle.depth_limit(); ++n) {
    const Address v = *puzzle.critical_address(n);
    int k = 0;
    try {
      k = first_return_time(puzzle, zero, v, horizon);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kNoReturnWithinHorizon) {
        throw Error(ErrorKind::kNonRecurrent, "critical point does not return to Y^" + std::to_string(n) + "(0)");
      }
      throw;
    }
    if (n + k > puzzle.depth_limit()) break;
    const Address w = *puzzle.critical_address(n + k);
    if (!compactly_contained(puzzle, w, v)) continue;
    const auto pv = puzzle.polygon(v);
    const auto pw = puzzle.polygon(w);
    const double diam = polygon_diameter(pv);
    const double gap = polygon_distance(pv, pw);
    if (gap >= gap_min_rel * diam) return V00Choice{v, k, gap, diam};
  }
  throw Error(ErrorKind::kAddressUnderflow, "no compactly contained return within the symbolic depth");
}

Nest principal_nest(const Puzzle& puzzle, const Address& v00, int t_max, int horizon) {
  const SymbolicAngle zero = critical_point_angle(puzzle);
  Nest nest;
  Address v = v00;
  for (int t = 0; t < t_max; ++t) {
    try {
      const int k = first_return_time(puzzle, zero, v, horizon);
      const int next_depth = depth_of(v) + k;
      if (next_depth > puzzle.depth_limit()) {
        nest.stop = ErrorKind::kAddressUnderflow;
        break;
      }
      const Address next = *puzzle.critical_address(next_depth);
      NestLevel level;
      level.t = t;
      level.piece = v;
      level.return_time = k;
      level.central = in_piece(puzzle, zero.shifted(k), next);
      nest.levels.push_back(level);
      v = next;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNoReturnWithinHorizon && e.kind() != ErrorKind::kAddressUnderflow) throw;
      nest.stop = e.kind();
      break;
    }
  }
  return nest;
}

CascadeSummary detect_cascades(const std::vector<bool>& central, int n_cascade) {
  CascadeSummary s;
  if (central.empty()) return s;
  s.first_value = central.front();
  bool value = central.front();
  int run = 0;
  for (bool b : central) {
    if (b == value) {
      ++run;
      continue;
    }
    s.runs.push_back(run);
    if (value) s.cascade_lengths.push_back(run);
    value = b;
    run = 1;
  }
  s.runs.push_back(run);
  if (value) s.cascade_lengths.push_back(run);
  s.renormalizable = value && run >= n_cascade;
  return s;
}

std::vector<bool> decode_cascades(const CascadeSummary& summary) {
  std::vector<bool> out;
  bool value = summary.first_value;
  for (int run : summary.runs) {
    out.insert(out.end(), static_cast<std::size_t>(run), value);
    value = !value;
  }
  return out;
}

std::vector<SymbolicAngle> random_angles_in(const Puzzle& puzzle, const Address& piece, std::size_t count,
                                            std::uint64_t seed, int tail) {
  const int l = puzzle.degree();
  const int depth = depth_of(piece);
  const auto gaps = puzzle.gaps_of(piece);
  const i128 d = puzzle.denominator(depth);
  // K digits so that every gap spans at least 16 cells of size l^-K
  int k_digits = 0;
  i128 lk = 1;
  while (lk < 16 * d) {
    lk *= l;
    ++k_digits;
  }
  std::mt19937_64 rng(seed);
  std::vector<double> weights;
  for (const auto& g : gaps) weights.push_back(static_cast<double>(g.length));
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::uniform_int_distribution<int> digit(0, l - 1);
  std::vector<SymbolicAngle> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const Gap& g = gaps[pick(rng)];
    // cells [P, P+1) / l^K inside (start, start + length) / d
    const i128 lo = (static_cast<i128>(g.start) * lk + d - 1) / d;
    const i128 hi = (static_cast<i128>(g.start + g.length) * lk) / d - 1;
    const auto span = static_cast<std::uint64_t>(hi - lo);
    std::uniform_int_distribution<std::uint64_t> cell(0, span);
    i128 p = (lo + static_cast<i128>(cell(rng))) % lk;
    std::vector<std::uint8_t> digits(static_cast<std::size_t>(k_digits + tail));
    for (int i = k_digits - 1; i >= 0; --i) {
      digits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(p % l);
      p /= l;
    }
    for (int i = 0; i < tail; ++i) digits[static_cast<std::size_t>(k_digits + i)] = static_cast<std::uint8_t>(digit(rng));
    out.push_back(SymbolicAngle::digits(std::move(digits), l));
  }
  return out;
}

ReturnSystem build_return_system(const Puzzle& puzzle, const Address& v, const std::vector<SymbolicAngle>& samples,
                                 int horizon) {
  ReturnSystem sys;
  sys.range = v;
  const int d = depth_of(v);
  auto add = [&](const SymbolicAngle& x) -> bool {
    int k = 0;
    try {
      k = first_return_time(puzzle, x, v, horizon);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kNoReturnWithinHorizon || e.kind() == ErrorKind::kAddressUnderflow) return false;
      throw;
    }
    if (d + k > puzzle.depth_limit()) return false;
    const auto pb = pull_back(puzzle, v, x, k);
    for (const auto& dom : sys.domains) {
      if (dom.piece == pb.piece) return true;
    }
    ReturnDomain dom;
    dom.piece = pb.piece;
    dom.return_time = k;
    int crit = 0;
    for (std::size_t i = 0; i + 1 < pb.chain.size(); ++i) crit += puzzle.is_critical(pb.chain[i]) ? 1 : 0;
    dom.degree = static_cast<int>(std::lround(std::pow(puzzle.degree(), crit)));
    dom.critical = puzzle.is_critical(pb.piece);
    sys.domains.push_back(std::move(dom));
    return true;
  };
  if (const auto crit = puzzle.critical_value_angle(); crit && in_piece(puzzle, critical_point_angle(puzzle), v)) {
    add(critical_point_angle(puzzle));
  }
  for (const auto& x : samples) {
    ++sys.samples;
    if (!in_piece(puzzle, x, v)) throw Error(ErrorKind::kInvalidArgument, "sample is not in V");
    if (add(x)) ++sys.returned;
  }
  return sys;
}

UnbranchedResult unbranched_check(const Puzzle& puzzle, const ReturnSystem& system, int horizon) {
  UnbranchedResult out;
  const SymbolicAngle zero = critical_point_angle(puzzle);
  const int d = depth_of(system.range);
  int next_g_time = 0;  // next time the g-orbit of 0 is defined to land in V
  bool g_alive = true;
  SymbolicAngle y = zero;
  for (int i = 0; i <= horizon; ++i) {
    bool in_v = false;
    try {
      in_v = puzzle.address_of(y, d) == system.range;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kAddressUnderflow) break;
      throw;
    }
    if (in_v) {
      if (!g_alive || i != next_g_time) {
        out.unbranched = false;
        out.witness = i;
        return out;
      }
      // advance g: find the domain holding f^i(0)
      g_alive = false;
      for (const auto& dom : system.domains) {
        try {
          if (puzzle.address_of(y, depth_of(dom.piece)) == dom.piece) {
            next_g_time = i + dom.return_time;
            g_alive = true;
            break;
          }
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kAddressUnderflow) throw;
        }
      }
    }
    y = y.shifted(1);
  }
  return out;
}

}  // namespace puzzlemeasure
