#include "puzzlemeasure/puzzle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace puzzlemeasure {

namespace {

using i128 = __int128;

constexpr long double kAngleUncertainty = 1e-12L;
constexpr std::int64_t kDenominatorCap = std::int64_t{1} << 61;

std::int64_t floor_div(i128 a, i128 b) {
  i128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return static_cast<std::int64_t>(q);
}

std::int64_t pos_mod(i128 a, i128 m) {
  i128 r = a % m;
  if (r < 0) r += m;
  return static_cast<std::int64_t>(r);
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

// Continued-fraction convergents p/q of x with q <= max_den.
std::vector<Angle> convergents(double x, std::int64_t max_den) {
  std::vector<Angle> out;
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int k = 0; k < 40; ++k) {
    const double a_d = std::floor(r);
    if (a_d > 1e12) break;
    const auto a = static_cast<std::int64_t>(a_d);
    const std::int64_t p2 = a * p1 + p0;
    const std::int64_t q2 = a * q1 + q0;
    if (q2 > max_den) break;
    if (q2 > 0) out.push_back(Angle::make(p2, q2));
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = r - a_d;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return out;
}

}  // namespace

std::string to_string(const Address& a) {
  std::ostringstream os;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) os << '.';
    if (a[i] < 0) os << 'c';
    else os << a[i];
  }
  return os.str();
}

SymbolicAngle critical_value_angle(const PotentialField& field) {
  const auto& f = field.map;
  const Cx c = f.c();
  const int l = f.degree();
  if (green(field, c).escaped) throw Error(ErrorKind::kInvalidArgument, "critical value escapes: disconnected Julia set");
  const double eps = 1e-10 * std::max(1.0, std::abs(c));
  std::vector<std::pair<int, double>> seen;
  for (int k = 0; k < 8; ++k) {
    const Cx dir = std::polar(1.0, 2.0 * std::numbers::pi * (k + 0.5) / 8.0);
    const Cx y = c + eps * dir;
    const auto g = green(field, y);
    if (!g.escaped || !(g.value > 0.0)) continue;
    try {
      seen.emplace_back(k, external_angle(field, y));
    } catch (const Error&) {
    }
  }
  if (seen.empty()) throw Error(ErrorKind::kNotLocatable, "no escaping points next to the critical value");

  std::vector<Angle> candidates;
  for (const auto& [dir, theta] : seen) {
    for (const auto& a : convergents(theta, 4096)) {
      if (std::fabs(static_cast<double>(a.value()) - theta) <= 1e-3 &&
          std::find(candidates.begin(), candidates.end(), a) == candidates.end()) {
        candidates.push_back(a);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Angle& a, const Angle& b) { return a.den < b.den; });
  for (const auto& a : candidates) {
    auto trace = trace_ray(field, a, 1.0, 1e-12);
    try {
      const Cx land = land_ray(trace.ray, 1e-7);
      if (std::abs(land - c) <= 1e-6 * std::max(1.0, std::abs(c))) return SymbolicAngle::exact(a, l);
    } catch (const Error&) {
    }
  }
  // Irrational (or unresolved) angle: keep the precision that two scales agree on.
  const int dir = seen.front().first;
  const Cx unit = std::polar(1.0, 2.0 * std::numbers::pi * (dir + 0.5) / 8.0);
  const double fine = external_angle(field, c + 1e-3 * eps * unit);
  double diff = std::fabs(fine - seen.front().second);
  diff = std::min(diff, 1.0 - diff);
  return SymbolicAngle::approximate(fine, 8.0L * diff + 1e-14L, l);
}

Puzzle::Puzzle(const PotentialField& field, PuzzleOptions options) : field_(field), g0_(options.g0) {
  if (!(g0_ > 0.0)) throw Error(ErrorKind::kInvalidArgument, "G0 must be positive");
  const int l = degree();
  if (!options.stars.empty()) {
    stars0_ = options.stars;
  } else {
    try {
      auto rays = rays_at_alpha(field_, options.cycle_search_cap);
      stars0_ = {rays.angles};
      alpha_ = rays.alpha;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNoDividingFixedPoint) throw;
      // Only the beta ray: every gap is its own piece.
      jordan_ = true;
      stars0_ = {{Angle{0, 1}}};
    }
  }
  for (auto& star : stars0_) {
    if (star.empty()) throw Error(ErrorKind::kInvalidArgument, "empty star");
    std::sort(star.begin(), star.end());
    for (const auto& a : star) {
      if (std::find(theta0_.begin(), theta0_.end(), a) != theta0_.end()) {
        throw Error(ErrorKind::kInvalidArgument, "angle listed twice");
      }
      theta0_.push_back(a);
      den0_ = std::lcm(den0_, a.den);
    }
  }
  std::sort(theta0_.begin(), theta0_.end());
  theta0_.erase(std::unique(theta0_.begin(), theta0_.end()), theta0_.end());
  // Depth-0 angle set must be forward invariant so that deeper sets are its preimages.
  for (const auto& a : theta0_) {
    if (!std::binary_search(theta0_.begin(), theta0_.end(), a.times(l))) {
      throw Error(ErrorKind::kInvalidArgument, "depth-0 angle set is not invariant under multiplication by l");
    }
  }

  // Depth-0 pieces: gap i ~ gap starting at the star-predecessor of its right endpoint.
  const std::size_t q = theta0_.size();
  auto index_of = [&](const Angle& a) {
    return static_cast<int>(std::lower_bound(theta0_.begin(), theta0_.end(), a) - theta0_.begin());
  };
  UnionFind uf(q);
  for (std::size_t i = 0; i < q; ++i) {
    const Angle right = theta0_[(i + 1) % q];
    for (const auto& star : stars0_) {
      auto it = std::find(star.begin(), star.end(), right);
      if (it == star.end()) continue;
      const Angle prev = it == star.begin() ? star.back() : *(it - 1);
      uf.unite(static_cast<int>(i), index_of(prev));
    }
  }
  std::map<int, int> root_to_id;
  gap_piece0_.resize(q);
  for (std::size_t i = 0; i < q; ++i) {
    const int r = uf.find(static_cast<int>(i));
    auto [it, inserted] = root_to_id.emplace(r, static_cast<int>(root_to_id.size()));
    gap_piece0_[i] = it->second;
    if (inserted) piece_gaps0_.emplace_back();
    piece_gaps0_[static_cast<std::size_t>(it->second)].push_back(static_cast<int>(i));
  }

  depth_limit_ = 0;
  while (depth_limit_ < options.depth_limit &&
         static_cast<i128>(den0_) * 2 * static_cast<i128>(std::pow(static_cast<double>(l), depth_limit_ + 1)) <
             kDenominatorCap) {
    ++depth_limit_;
  }

  if (jordan_) {
    theta_star_num_.assign(static_cast<std::size_t>(depth_limit_), 0);
  } else {
    theta_c_ = puzzlemeasure::critical_value_angle(field_);
    const SymbolicAngle& tc = *theta_c_;
    i128 digits_int = 0;  // floor(l^j theta_c)
    for (int j = 0; j < depth_limit_; ++j) {
      try {
        if (j > 0) digits_int = digits_int * l + tc.shifted(j - 1).leading_digit();
        const SymbolicAngle frac = tc.shifted(j);
        const i128 dj = static_cast<i128>(denominator(j));
        i128 lower = 0, upper = 0;
        bool first = true;
        for (const auto& t : theta0_) {
          const int cmp = frac.compare(t);
          if (cmp == 0) throw Error(ErrorKind::kOnBoundary, "critical value lies on a depth-0 ray");
          const i128 i = digits_int - (cmp < 0 ? 1 : 0);
          const i128 a = static_cast<i128>(t.num) * (den0_ / t.den);
          const i128 lo = a + i * den0_;
          const i128 hi = lo + den0_;
          if (first || lo > lower) lower = lo;
          if (first || hi < upper) upper = hi;
          first = false;
        }
        theta_star_num_.push_back(pos_mod(lower + upper, 2 * dj));
        cv_address_.push_back(address_of(tc, j));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kAddressUnderflow) throw;
        depth_limit_ = j;
        break;
      }
    }
    if (static_cast<int>(theta_star_num_.size()) > depth_limit_) theta_star_num_.resize(static_cast<std::size_t>(depth_limit_));
    if (static_cast<int>(cv_address_.size()) > depth_limit_) cv_address_.resize(static_cast<std::size_t>(depth_limit_));
  }
  materialize_level0();
}

double Puzzle::potential_at(int depth) const { return g0_ / std::pow(static_cast<double>(degree()), depth); }

std::int64_t Puzzle::denominator(int depth) const {
  i128 d = den0_;
  for (int j = 0; j < depth; ++j) d *= degree();
  if (d >= (i128{1} << 62)) throw Error(ErrorKind::kAddressUnderflow, "denominator overflow at this depth");
  return static_cast<std::int64_t>(d);
}

Angle Puzzle::theta_star(int depth) const {
  return Angle::make(theta_star_num_.at(static_cast<std::size_t>(depth)), 2 * denominator(depth));
}

int Puzzle::depth0_gap(const SymbolicAngle& theta) const {
  int count = 0;
  for (const auto& t : theta0_) {
    const int cmp = theta.compare(t);
    if (cmp == 0) throw Error(ErrorKind::kOnBoundary, "angle is a depth-0 ray");
    if (cmp > 0) ++count;
  }
  const int q = static_cast<int>(theta0_.size());
  return count == 0 ? q - 1 : count - 1;
}

int Puzzle::wedge(const SymbolicAngle& theta, int depth) const {
  const int l = degree();
  const std::int64_t t = theta_star_num_.at(static_cast<std::size_t>(depth));
  const std::int64_t d = denominator(depth);
  int count = 0;
  for (int k = 0; k < l; ++k) {
    const Angle b = Angle::make(t + 2 * static_cast<std::int64_t>(k) * d, 2 * d * l);
    if (theta.compare(b) >= 0) ++count;
  }
  return count == 0 ? l - 1 : count - 1;
}

Address Puzzle::address_of(const SymbolicAngle& theta, int depth) const {
  if (depth < 0) throw Error(ErrorKind::kInvalidArgument, "negative depth");
  if (depth > depth_limit_) throw Error(ErrorKind::kAddressUnderflow, "depth beyond the symbolic limit");
  std::vector<SymbolicAngle> xs(static_cast<std::size_t>(depth) + 1, theta);
  for (int j = depth; j > 0; --j) xs[static_cast<std::size_t>(j - 1)] = xs[static_cast<std::size_t>(j)].shifted(1);
  Address addr(static_cast<std::size_t>(depth) + 1);
  addr[0] = gap_piece0_[static_cast<std::size_t>(depth0_gap(xs[0]))];
  for (int j = 1; j <= depth; ++j) {
    const auto& cv = cv_address_.empty() ? Address{} : cv_address_[static_cast<std::size_t>(j - 1)];
    const bool critical = !jordan_ && std::equal(addr.begin(), addr.begin() + j, cv.begin(), cv.end());
    addr[static_cast<std::size_t>(j)] = critical ? -1 : wedge(xs[static_cast<std::size_t>(j)], j - 1);
  }
  return addr;
}

Address Puzzle::address_of(const Angle& theta, int depth) const {
  return address_of(SymbolicAngle::exact(theta, degree()), depth);
}

std::optional<Address> Puzzle::critical_address(int depth) const {
  if (jordan_) return std::nullopt;
  if (depth > depth_limit_) throw Error(ErrorKind::kAddressUnderflow, "depth beyond the symbolic limit");
  if (depth == 0) return Address{gap_piece0_[static_cast<std::size_t>(depth0_gap(theta_c_->preimage(0)))]};
  Address a = cv_address_[static_cast<std::size_t>(depth - 1)];
  a.push_back(-1);
  return a;
}

bool Puzzle::is_critical(const Address& a) const {
  if (jordan_ || a.empty()) return false;
  if (a.size() == 1) return a == *critical_address(0);
  return a.back() == -1;
}

namespace {

std::vector<Gap> lift_gaps(const std::vector<Gap>& gaps, std::int64_t d, std::int64_t t, int l, int choice) {
  std::vector<Gap> out;
  for (const auto& g : gaps) {
    for (int j = 0; j < l; ++j) {
      const i128 s = static_cast<i128>(g.start) + static_cast<i128>(j) * d;
      if (choice >= 0) {
        const i128 x = 2 * s + g.length - t;
        if (pos_mod(floor_div(x, 2 * static_cast<i128>(d)), l) != choice) continue;
      }
      out.push_back(Gap{static_cast<std::int64_t>(s), g.length});
    }
  }
  std::sort(out.begin(), out.end(), [](const Gap& a, const Gap& b) { return a.start < b.start; });
  return out;
}

}  // namespace

std::vector<Gap> Puzzle::gaps_of(const Address& a) const {
  if (a.empty()) throw Error(ErrorKind::kInvalidArgument, "empty address");
  const int depth = static_cast<int>(a.size()) - 1;
  if (depth > depth_limit_) throw Error(ErrorKind::kAddressUnderflow, "depth beyond the symbolic limit");
  if (a[0] < 0 || a[0] >= static_cast<int>(piece_gaps0_.size())) {
    throw Error(ErrorKind::kAssemblyFailure, "no depth-0 piece " + to_string(a));
  }
  const std::size_t q = theta0_.size();
  std::vector<Gap> gaps;
  for (int i : piece_gaps0_[static_cast<std::size_t>(a[0])]) {
    const Angle& s = theta0_[static_cast<std::size_t>(i)];
    const Angle& e = theta0_[(static_cast<std::size_t>(i) + 1) % q];
    const std::int64_t sn = s.num * (den0_ / s.den);
    std::int64_t en = e.num * (den0_ / e.den);
    if (en <= sn) en += den0_;
    gaps.push_back(Gap{sn, en - sn});
  }
  for (int j = 1; j <= depth; ++j) {
    const int choice = a[static_cast<std::size_t>(j)];
    const bool critical_image =
        !jordan_ && std::equal(a.begin(), a.begin() + j, cv_address_[static_cast<std::size_t>(j - 1)].begin(),
                               cv_address_[static_cast<std::size_t>(j - 1)].end());
    if ((choice == -1) != critical_image || choice < -1 || choice >= degree()) {
      throw Error(ErrorKind::kAssemblyFailure, "no piece with address " + to_string(a));
    }
    const std::size_t before = gaps.size();
    gaps = lift_gaps(gaps, denominator(j - 1), theta_star_num_[static_cast<std::size_t>(j - 1)], degree(), choice);
    const std::size_t expected = choice == -1 ? before * static_cast<std::size_t>(degree()) : before;
    if (gaps.size() != expected) throw Error(ErrorKind::kAssemblyFailure, "lift does not cover " + to_string(a));
  }
  return gaps;
}

Angle Puzzle::interior_angle(const Address& a) const {
  const auto gaps = gaps_of(a);
  const Gap* best = &gaps.front();
  for (const auto& g : gaps) {
    if (g.length > best->length) best = &g;
  }
  const int depth = static_cast<int>(a.size()) - 1;
  return Angle::make(2 * best->start + best->length, 2 * denominator(depth));
}

Address Puzzle::parent_of(const Address& a) const {
  if (a.size() < 2) throw Error(ErrorKind::kInvalidArgument, "depth-0 pieces have no parent");
  return address_of(interior_angle(a), static_cast<int>(a.size()) - 2);
}

Address Puzzle::image_of(const Address& a) {
  if (a.size() < 2) throw Error(ErrorKind::kInvalidArgument, "depth-0 pieces have no image piece");
  return Address(a.begin(), a.end() - 1);
}

std::vector<Angle> Puzzle::star_of(const Angle& theta, int depth) const {
  if (depth == 0) {
    for (const auto& star : stars0_) {
      if (std::find(star.begin(), star.end(), theta) != star.end()) return star;
    }
    throw Error(ErrorKind::kInvalidArgument, "angle is not a depth-0 boundary angle");
  }
  const auto parent = star_of(theta.times(degree()), depth - 1);
  const int w = wedge(SymbolicAngle::exact(theta, degree()), depth - 1);
  std::vector<Angle> out;
  for (const auto& p : parent) {
    for (const auto& pre : p.preimages(degree())) {
      if (wedge(SymbolicAngle::exact(pre, degree()), depth - 1) == w) out.push_back(pre);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<BoundarySegment> Puzzle::boundary(const Address& a) const {
  const int depth = static_cast<int>(a.size()) - 1;
  const auto gaps = gaps_of(a);
  const std::int64_t d = denominator(depth);
  const double g = potential_at(depth);
  auto start_angle = [&](const Gap& gap) { return Angle::make(gap.start, d); };
  auto end_angle = [&](const Gap& gap) { return Angle::make(gap.start + gap.length, d); };
  std::vector<BoundarySegment> out;
  if (jordan_) {
    for (const auto& gap : gaps) {
      out.push_back({BoundarySegment::Kind::kArc, start_angle(gap), end_angle(gap), g, g});
      out.push_back({BoundarySegment::Kind::kRay, end_angle(gap), end_angle(gap), g, 0.0});
      out.push_back({BoundarySegment::Kind::kArc, end_angle(gap), start_angle(gap), 0.0, 0.0});
      out.push_back({BoundarySegment::Kind::kRay, start_angle(gap), start_angle(gap), 0.0, g});
    }
    return out;
  }
  std::vector<bool> visited(gaps.size(), false);
  std::size_t cur = 0;
  for (std::size_t n = 0; n < gaps.size(); ++n) {
    if (visited[cur]) throw Error(ErrorKind::kAssemblyFailure, "boundary revisits a gap of " + to_string(a));
    visited[cur] = true;
    const Angle b = end_angle(gaps[cur]);
    out.push_back({BoundarySegment::Kind::kArc, start_angle(gaps[cur]), b, g, g});
    const auto star = star_of(b, depth);
    auto it = std::find(star.begin(), star.end(), b);
    const Angle prev = it == star.begin() ? star.back() : *(it - 1);
    out.push_back({BoundarySegment::Kind::kRay, b, b, g, 0.0});
    out.push_back({BoundarySegment::Kind::kRay, prev, prev, 0.0, g});
    std::size_t next = gaps.size();
    for (std::size_t k = 0; k < gaps.size(); ++k) {
      if (start_angle(gaps[k]) == prev) next = k;
    }
    if (next == gaps.size()) throw Error(ErrorKind::kAssemblyFailure, "boundary does not close for " + to_string(a));
    cur = next;
  }
  if (cur != 0) throw Error(ErrorKind::kAssemblyFailure, "boundary is not a single cycle for " + to_string(a));
  return out;
}

void Puzzle::materialize_level0() {
  levels_.clear();
  index_.clear();
  gap_table_.clear();
  std::vector<PuzzlePiece> level;
  const auto crit = critical_address(0);
  for (std::size_t id = 0; id < piece_gaps0_.size(); ++id) {
    PuzzlePiece p;
    p.depth = 0;
    p.id = static_cast<int>(id);
    p.address = {static_cast<int>(id)};
    p.critical = crit && *crit == p.address;
    p.gaps = gaps_of(p.address);
    level.push_back(std::move(p));
  }
  levels_.push_back(std::move(level));
  index_.emplace_back();
  gap_table_.emplace_back();
  for (const auto& p : levels_[0]) {
    index_[0][p.address] = p.id;
    for (const auto& g : p.gaps) gap_table_[0].emplace_back(g.start, p.id);
  }
  std::sort(gap_table_[0].begin(), gap_table_[0].end());
}

void Puzzle::materialize_next() {
  const int m = refined_depth() + 1;
  if (m > depth_limit_) throw Error(ErrorKind::kAddressUnderflow, "refinement beyond the symbolic limit");
  const auto& prev = levels_.back();
  const std::int64_t d_prev = denominator(m - 1);
  const std::int64_t t = theta_star_num_[static_cast<std::size_t>(m - 1)];
  const int l = degree();
  std::vector<PuzzlePiece> level;
  std::map<Address, int> index;
  std::vector<std::pair<std::int64_t, int>> table;
  const auto& table_prev = gap_table_.back();
  for (const auto& q : prev) {
    const bool cv = !jordan_ && q.address == cv_address_[static_cast<std::size_t>(m - 1)];
    std::vector<int> choices;
    if (cv) choices = {-1};
    else for (int k = 0; k < l; ++k) choices.push_back(k);
    for (int choice : choices) {
      PuzzlePiece p;
      p.depth = m;
      p.id = static_cast<int>(level.size());
      p.address = q.address;
      p.address.push_back(choice);
      p.critical = choice == -1;
      p.gaps = lift_gaps(q.gaps, d_prev, t, l, choice);
      p.image = q.id;
      if (p.gaps.size() != (cv ? q.gaps.size() * static_cast<std::size_t>(l) : q.gaps.size())) {
        throw Error(ErrorKind::kAssemblyFailure, "lift does not cover " + to_string(p.address));
      }
      // parent: the depth m-1 gap containing each child gap
      for (const auto& g : p.gaps) {
        const i128 mid2 = 2 * static_cast<i128>(g.start) + g.length;  // over 2 D_m
        auto it = std::upper_bound(table_prev.begin(), table_prev.end(), mid2,
                                   [l](i128 v, const std::pair<std::int64_t, int>& e) {
                                     return v < 2 * static_cast<i128>(e.first) * l;
                                   });
        const int parent = it == table_prev.begin() ? table_prev.back().second : (it - 1)->second;
        if (p.parent == -1) p.parent = parent;
        else if (p.parent != parent) throw Error(ErrorKind::kAssemblyFailure, "piece straddles two parents: " + to_string(p.address));
      }
      index[p.address] = p.id;
      for (const auto& g : p.gaps) table.emplace_back(g.start, p.id);
      level.push_back(std::move(p));
    }
  }
  std::sort(table.begin(), table.end());
  levels_.push_back(std::move(level));
  index_.push_back(std::move(index));
  gap_table_.push_back(std::move(table));
}

void Puzzle::refine(int depth) {
  if (depth > depth_limit_) throw Error(ErrorKind::kAddressUnderflow, "refinement beyond the symbolic limit");
  while (refined_depth() < depth) materialize_next();
}

const std::vector<PuzzlePiece>& Puzzle::level(int depth) const {
  if (depth < 0 || depth > refined_depth()) throw Error(ErrorKind::kAddressUnderflow, "level not refined");
  return levels_[static_cast<std::size_t>(depth)];
}

int Puzzle::id_of(int depth, const Address& a) const {
  if (depth < 0 || depth > refined_depth()) return -1;
  auto it = index_[static_cast<std::size_t>(depth)].find(a);
  return it == index_[static_cast<std::size_t>(depth)].end() ? -1 : it->second;
}

int Puzzle::map_piece(int depth, int id) const {
  if (depth < 1) throw Error(ErrorKind::kInvalidArgument, "depth-0 pieces have no image piece");
  return piece(depth, id).image;
}

int Puzzle::critical_piece(int depth) const {
  const auto a = critical_address(depth);
  return a ? id_of(depth, *a) : -1;
}

int Puzzle::locate_angle(const Angle& theta, int depth) const {
  const auto& table = gap_table_.at(static_cast<std::size_t>(depth));
  const std::int64_t d = denominator(depth);
  // theta = num/den vs start/d: compare num * d with start * den
  auto it = std::upper_bound(table.begin(), table.end(), theta, [d](const Angle& v, const std::pair<std::int64_t, int>& e) {
    return static_cast<i128>(v.num) * d < static_cast<i128>(e.first) * v.den;
  });
  const auto& hit = it == table.begin() ? table.back() : *(it - 1);
  if (static_cast<i128>(theta.num) * d == static_cast<i128>(hit.first) * theta.den) {
    throw Error(ErrorKind::kOnBoundary, "angle is a boundary ray");
  }
  return hit.second;
}

Address Puzzle::locate_address(Cx x, int depth) const {
  if (depth > depth_limit_) throw Error(ErrorKind::kAddressUnderflow, "depth beyond the symbolic limit");
  const double g_n = potential_at(depth);
  const auto g = green(field_, x);
  if (g.escaped && g.value > 0.0) {
    if (g.value >= g_n) throw Error(ErrorKind::kOutsidePotential, "point lies above the depth equipotential");
    const double theta = external_angle(field_, x);
    return address_of(SymbolicAngle::approximate(theta, kAngleUncertainty, degree()), depth);
  }
  const double eps = 1e-10 * std::max(1.0, std::abs(x));
  std::optional<Address> found;
  for (int k = 0; k < 8; ++k) {
    const Cx y = x + eps * std::polar(1.0, 2.0 * std::numbers::pi * (k + 0.5) / 8.0);
    const auto gy = green(field_, y);
    if (!gy.escaped || !(gy.value > 0.0)) continue;
    const double theta = external_angle(field_, y);
    Address a = address_of(SymbolicAngle::approximate(theta, kAngleUncertainty, degree()), depth);
    if (found && *found != a) throw Error(ErrorKind::kOnBoundary, "neighbours fall in different pieces");
    found = std::move(a);
  }
  if (!found) throw Error(ErrorKind::kNotLocatable, "no escaping neighbours");
  return *found;
}

int Puzzle::locate(Cx x, int depth) const {
  const int id = id_of(depth, locate_address(x, depth));
  if (id < 0) throw Error(ErrorKind::kAddressUnderflow, "level not refined");
  return id;
}

std::vector<Cx> Puzzle::polygon(const Address& a, double g_low, int steps_per_halving) const {
  const auto segments = boundary(a);
  std::map<Angle, std::vector<Cx>> ray_cache;
  auto ray_down = [&](const Angle& theta, double g_hi) -> const std::vector<Cx>& {
    auto it = ray_cache.find(theta);
    if (it != ray_cache.end()) return it->second;
    auto trace = trace_ray(field_, theta, g_hi, g_low, steps_per_halving);
    std::vector<Cx> pts;
    for (const auto& p : trace.ray.points) pts.push_back(p.z);
    try {
      pts.push_back(land_ray(trace.ray, 1e-3));
    } catch (const Error&) {
    }
    return ray_cache.emplace(theta, std::move(pts)).first->second;
  };
  std::vector<Cx> out;
  for (const auto& s : segments) {
    if (s.kind == BoundarySegment::Kind::kRay) {
      const double g_hi = std::max(s.g_from, s.g_to);
      const auto& pts = ray_down(s.from, g_hi);
      if (s.g_from > s.g_to) out.insert(out.end(), pts.begin(), pts.end());
      else out.insert(out.end(), pts.rbegin(), pts.rend());
    } else {
      // arc from -> to counterclockwise (or clockwise along J in Jordan mode)
      const long double from = s.from.value();
      long double to = s.to.value();
      const bool along_julia = s.g_from == 0.0;
      if (!along_julia && to <= from) to += 1.0L;
      if (along_julia && to >= from) to -= 1.0L;
      const double g = along_julia ? g_low : s.g_from;
      const int n = std::max(4, static_cast<int>(std::ceil(std::fabs(static_cast<double>(to - from)) * 256)));
      for (int k = 0; k <= n; ++k) {
        const long double th = from + (to - from) * k / n;
        const Angle approx_angle = Angle::make(static_cast<std::int64_t>(std::llround((th - std::floor(th)) * (1LL << 40))), 1LL << 40);
        out.push_back(ray_point(field_, approx_angle, g, steps_per_halving));
      }
    }
  }
  return out;
}

double polygon_diameter(const std::vector<Cx>& points) {
  if (points.size() < 2) return 0.0;
  std::vector<Cx> p = points;
  std::sort(p.begin(), p.end(), [](Cx a, Cx b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); });
  auto cross = [](Cx o, Cx a, Cx b) {
    return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
  };
  std::vector<Cx> hull(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
    hull[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], p[i - 1]) <= 0) --k;
    hull[k++] = p[i - 1];
  }
  hull.resize(k > 1 ? k - 1 : k);
  double best = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    for (std::size_t j = i + 1; j < hull.size(); ++j) best = std::max(best, std::abs(hull[i] - hull[j]));
  }
  return best;
}

bool point_in_polygon(Cx z, const std::vector<Cx>& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Cx a = poly[i];
    const Cx b = poly[j];
    if ((a.imag() > z.imag()) != (b.imag() > z.imag())) {
      const double x = (b.real() - a.real()) * (z.imag() - a.imag()) / (b.imag() - a.imag()) + a.real();
      if (z.real() < x) inside = !inside;
    }
  }
  return inside;
}

namespace {

double segment_distance(Cx p, Cx a, Cx b) {
  const Cx ab = b - a;
  const double len2 = std::norm(ab);
  double t = len2 > 0 ? ((p - a) * std::conj(ab)).real() / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(p - (a + t * ab));
}

}  // namespace

double polygon_distance(const std::vector<Cx>& a, const std::vector<Cx>& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const Cx p : a) {
    for (std::size_t j = 0; j < b.size(); ++j) best = std::min(best, segment_distance(p, b[j], b[(j + 1) % b.size()]));
  }
  for (const Cx p : b) {
    for (std::size_t j = 0; j < a.size(); ++j) best = std::min(best, segment_distance(p, a[j], a[(j + 1) % a.size()]));
  }
  return best;
}

std::vector<NestDiameter> critical_nest(const Puzzle& puzzle, int depth) {
  if (puzzle.jordan_mode()) throw Error(ErrorKind::kInvalidArgument, "no critical pieces without a dividing fixed point");
  std::vector<NestDiameter> out;
  for (int n = 0; n <= depth; ++n) {
    const auto a = *puzzle.critical_address(n);
    out.push_back({n, a, polygon_diameter(puzzle.polygon(a))});
  }
  return out;
}

}  // namespace puzzlemeasure
