#include "puzzlemeasure/measure.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "puzzlemeasure/kernels/kernels.hpp"
#include "puzzlemeasure/parallel.hpp"

namespace puzzlemeasure {

namespace {

struct Located {
  Cx z;
  double potential;
};

// Deepest point of the ray reached before g (the prefix when Newton stalls).
Located ray_point_best(const PotentialField& field, const Angle& theta, double g) {
  const auto trace = trace_ray(field, theta, std::max(14.8, 2 * g), g);
  if (trace.ray.points.empty()) throw Error(ErrorKind::kNewtonStall, "ray " + to_string(theta) + " has no points");
  const auto& p = trace.ray.points.back();
  return {p.z, p.potential};
}

// The l-th root of w nearest to the seed.
Cx nearest_root(Cx w, int l, Cx seed) {
  const Cx r = std::pow(w, 1.0 / l);
  const Cx turn = std::polar(1.0, 2 * M_PI / l);
  Cx best = r;
  Cx cur = r;
  for (int k = 1; k < l; ++k) {
    cur *= turn;
    if (std::abs(cur - seed) < std::abs(best - seed)) best = cur;
  }
  return best;
}

// A third of the way into the widest gap: the midpoint of a symmetric piece is often the ray
// through the critical value.
Angle sample_angle(const Puzzle& puzzle, const Address& a) {
  const auto gaps = puzzle.gaps_of(a);
  const Gap* best = &gaps.front();
  for (const auto& g : gaps) {
    if (g.length > best->length) best = &g;
  }
  const std::int64_t d = puzzle.denominator(static_cast<int>(a.size()) - 1);
  const auto tc = puzzle.critical_value_angle();
  for (std::int64_t k : {3, 5}) {
    const Angle theta = Angle::make(k * best->start + best->length, k * d);
    if (!(tc && tc->is_exact() && tc->exact_value() == theta)) return theta;
  }
  return Angle::make(5 * best->start + 2 * best->length, 5 * d);
}

}  // namespace

Partition build_partition(Puzzle& puzzle, int depth, double sample_potential) {
  if (depth < 1) throw Error(ErrorKind::kInvalidArgument, "partition depth must be at least 1");
  puzzle.refine(depth);
  const auto& field = puzzle.field();
  const int l = puzzle.degree();
  const auto& pieces = puzzle.level(depth);
  const double g_sample = sample_potential * puzzle.g0();

  struct Slot {
    bool ok = false;
    Atom atom;
    std::vector<std::pair<Angle, Cx>> pre;  // preimage angle, point
    std::size_t critical_hits = 0;
  };
  std::vector<Slot> slots(pieces.size());
  parallel_for(pieces.size(), [&](std::size_t i) {
    const auto& piece = pieces[i];
    Slot& s = slots[i];
    const Angle theta = sample_angle(puzzle, piece.address);
    Located at;
    try {
      at = ray_point_best(field, theta, g_sample);
    } catch (const Error&) {
      return;
    }
    s.atom.piece = piece.id;
    s.atom.address = piece.address;
    s.atom.critical = piece.critical;
    s.atom.angle = theta;
    s.atom.sample = at.z;
    s.atom.potential = at.potential;
    s.atom.image = piece.image;
    const Cx w = at.z - field.map.c();
    for (const Angle& pre : theta.preimages(l)) {
      Cx seed;
      try {
        seed = ray_point_best(field, pre, at.potential / l).z;
      } catch (const Error&) {
        return;
      }
      const Cx y = nearest_root(w, l, seed);
      if (std::abs(y) <= 1e-12) {
        ++s.critical_hits;
        continue;
      }
      s.pre.emplace_back(pre, y);
    }
    s.ok = true;
  });

  Partition part;
  part.puzzle = &puzzle;
  part.depth = depth;
  part.atom_of_piece.assign(pieces.size(), -1);
  for (auto& s : slots) {
    if (!s.ok) {
      ++part.dropped_atoms;
      continue;
    }
    part.atom_of_piece[static_cast<std::size_t>(s.atom.piece)] = static_cast<int>(part.atoms.size());
    part.atoms.push_back(s.atom);
  }
  if (part.atoms.empty()) throw Error(ErrorKind::kEmptyPartition, "no atom has a sample point");
  part.branches.resize(part.atoms.size());
  part.children.assign(puzzle.level(depth - 1).size(), {});
  std::size_t a = 0;
  for (auto& s : slots) {
    if (!s.ok) continue;
    part.dropped_branches += s.critical_hits;
    for (const auto& [angle, y] : s.pre) {
      const int b = part.atom_of_piece[static_cast<std::size_t>(puzzle.locate_angle(angle, depth))];
      if (b < 0) continue;
      const double log_df = std::log(static_cast<double>(l)) + (l - 1) * std::log(std::abs(y));
      part.branches[a].push_back(Branch{b, y, log_df});
    }
    ++a;
  }
  for (std::size_t i = 0; i < part.atoms.size(); ++i) {
    part.children[static_cast<std::size_t>(pieces[static_cast<std::size_t>(part.atoms[i].piece)].parent)].push_back(
        static_cast<int>(i));
  }
  return part;
}

double TransferMatrix::entry(std::size_t a, std::size_t b) const {
  double s = 0.0;
  for (auto k = row_ptr[a]; k < row_ptr[a + 1]; ++k) {
    if (col[k] == b) s += val[k];
  }
  return s;
}

std::vector<double> TransferMatrix::row_sums() const {
  std::vector<double> out(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (auto k = row_ptr[a]; k < row_ptr[a + 1]; ++k) out[a] += val[k];
  }
  return out;
}

TransferMatrix transfer_matrix(const Partition& partition, double delta) {
  if (!(delta >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "delta must be nonnegative");
  TransferMatrix m;
  m.n = partition.size();
  m.row_ptr.push_back(0);
  std::vector<std::uint32_t> count(m.n, 0);
  for (const auto& row : partition.branches) {
    for (const auto& br : row) {
      m.col.push_back(static_cast<std::uint32_t>(br.atom));
      m.val.push_back(std::exp(-delta * br.log_df));
      ++count[static_cast<std::size_t>(br.atom)];
    }
    m.row_ptr.push_back(static_cast<std::uint32_t>(m.col.size()));
  }
  m.t_row_ptr.assign(m.n + 1, 0);
  for (std::size_t b = 0; b < m.n; ++b) m.t_row_ptr[b + 1] = m.t_row_ptr[b] + count[b];
  m.t_col.resize(m.col.size());
  m.t_val.resize(m.val.size());
  auto fill = m.t_row_ptr;
  for (std::size_t a = 0; a < m.n; ++a) {
    for (auto k = m.row_ptr[a]; k < m.row_ptr[a + 1]; ++k) {
      const auto pos = fill[m.col[k]]++;
      m.t_col[pos] = static_cast<std::uint32_t>(a);
      m.t_val[pos] = m.val[k];
    }
  }
  return m;
}

PowerResult power_iteration(const TransferMatrix& m, bool left, std::uint64_t seed, double tol) {
  const auto& k = kernels::active();
  const std::size_t n = m.n;
  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    double s = 0.0;
    for (auto& v : x) s += (v = u(rng));
    for (auto& v : x) v /= s;
  }
  const auto& rp = left ? m.t_row_ptr : m.row_ptr;
  const auto& cl = left ? m.t_col : m.col;
  const auto& vl = left ? m.t_val : m.val;
  std::vector<double> y(n);
  PowerResult out;
  double lambda_prev = 0.0;
  // the L1 change bottoms out at a few ulps per entry
  const double vec_tol = std::max(tol * 1e-4, 4.0 * static_cast<double>(n) * 2.2e-16);
  for (int it = 1; it <= kPowerIterationMax; ++it) {
    k.csr_spmv(n, rp.data(), cl.data(), vl.data(), x.data(), y.data());
    double s = 0.0;
    for (double v : y) s += v;
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::kPowerIterationStall, "transfer operator annihilated the iterate");
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = y[i] / s;
      change += std::fabs(v - x[i]);
      x[i] = v;
    }
    const double lambda = s;  // x summed to 1
    if (it > 1 && std::fabs(lambda - lambda_prev) <= tol * lambda && change <= vec_tol) {
      out.eigenvalue = lambda;
      out.vector = std::move(x);
      out.iterations = it;
      return out;
    }
    lambda_prev = lambda;
  }
  throw Error(ErrorKind::kPowerIterationStall, "power iteration did not converge");
}

double pressure(const Partition& partition, double delta) {
  return std::log(power_iteration(transfer_matrix(partition, delta), false).eigenvalue);
}

double find_delta(const Partition& partition, double tol) {
  double lo = 0.0;
  double hi = kDeltaHigh;
  const double p_lo = pressure(partition, lo);
  const double p_hi = pressure(partition, hi);
  if (!(p_lo > 0.0 && p_hi < 0.0)) {
    throw Error(ErrorKind::kNoBracket, "pressure does not change sign on [0, 4]");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double p = pressure(partition, mid);
    if (std::fabs(p) <= tol || hi - lo < 1e-14) return mid;
    (p > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> eigenmeasure(const Partition& partition, double delta, std::uint64_t seed) {
  return power_iteration(transfer_matrix(partition, delta), true, seed).vector;
}

ConformalityDefect conformality_defect(const Partition& partition, const std::vector<double>& weights, double delta) {
  ConformalityDefect d;
  for (std::size_t a = 0; a < partition.size(); ++a) {
    const Atom& atom = partition.atoms[a];
    if (atom.critical) continue;
    double image_mass = 0.0;
    for (int b : partition.children[static_cast<std::size_t>(atom.image)]) image_mass += weights[static_cast<std::size_t>(b)];
    const double df = std::abs(partition.puzzle->field().map.derivative(atom.sample));
    const double diff = std::fabs(image_mass - std::pow(df, delta) * weights[a]);
    d.absolute = std::max(d.absolute, diff);
    if (image_mass > 0.0) d.relative = std::max(d.relative, diff / image_mass);
  }
  return d;
}

double conformality_residual(const Partition& partition, const std::vector<double>& weights, double delta) {
  return conformality_defect(partition, weights, delta).absolute;
}

ConformalEstimate estimate_conformal(const Partition& partition, double tol, std::uint64_t seed) {
  ConformalEstimate e;
  e.delta = find_delta(partition, tol);
  const auto m = transfer_matrix(partition, e.delta);
  const auto left = power_iteration(m, true, seed);
  e.weights = left.vector;
  e.eigenvalue = left.eigenvalue;
  e.pressure_residual = std::fabs(std::log(left.eigenvalue));
  const auto d = conformality_defect(partition, e.weights, e.delta);
  e.conformality_residual = d.absolute;
  e.relative_conformality_residual = d.relative;
  return e;
}

std::size_t AtomSet::count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true)); }

double AtomSet::mass(const std::vector<double>& weights) const {
  double s = 0.0;
  for (std::size_t a = 0; a < bits_.size(); ++a) {
    if (bits_[a]) s += weights[a];
  }
  return s;
}

AtomSet AtomSet::complement() const {
  AtomSet out(bits_.size());
  for (std::size_t a = 0; a < bits_.size(); ++a) out.bits_[a] = !bits_[a];
  return out;
}

AtomSet AtomSet::intersect(const AtomSet& other) const {
  AtomSet out(bits_.size());
  for (std::size_t a = 0; a < bits_.size(); ++a) out.bits_[a] = bits_[a] && other.bits_[a];
  return out;
}

AtomSet AtomSet::unite(const AtomSet& other) const {
  AtomSet out(bits_.size());
  for (std::size_t a = 0; a < bits_.size(); ++a) out.bits_[a] = bits_[a] || other.bits_[a];
  return out;
}

bool AtomSet::subset_of(const AtomSet& other) const {
  for (std::size_t a = 0; a < bits_.size(); ++a) {
    if (bits_[a] && !other.bits_[a]) return false;
  }
  return true;
}

double density(const AtomSet& x, const AtomSet& y, const std::vector<double>& weights) {
  const double my = y.mass(weights);
  if (!(my > 0.0)) throw Error(ErrorKind::kZeroDenominator, "dens(X | Y) with mu(Y) = 0");
  return x.intersect(y).mass(weights) / my;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::kInvalidArgument, "total variation of vectors of different length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return 0.5 * s;
}

void write_partition_csv(std::ostream& out, const Partition& partition, const ConformalEstimate& estimate) {
  out << "atom_id,depth,address,weight,df_delta,image_atom_ids\n";
  char buf[64];
  for (std::size_t a = 0; a < partition.size(); ++a) {
    const Atom& atom = partition.atoms[a];
    const double df = std::abs(partition.puzzle->field().map.derivative(atom.sample));
    out << a << ',' << partition.depth << ',' << to_string(atom.address) << ',';
    std::snprintf(buf, sizeof buf, "%.17g", estimate.weights[a]);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", std::pow(df, estimate.delta));
    out << buf << ',';
    const auto& kids = partition.children[static_cast<std::size_t>(atom.image)];
    for (std::size_t i = 0; i < kids.size(); ++i) out << (i ? " " : "") << kids[i];
    out << '\n';
  }
}

}  // namespace puzzlemeasure
