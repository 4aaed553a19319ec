#include "puzzlemeasure/lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace puzzlemeasure {

namespace {

std::uint64_t splitmix(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform(std::uint64_t& s) { return static_cast<double>(splitmix(s) >> 11) * 0x1.0p-53; }

int depth_of(const Address& a) { return static_cast<int>(a.size()) - 1; }

// ancestors[d][atom] = id of the depth-d piece containing the atom
std::vector<std::vector<int>> ancestor_table(const Partition& p) {
  const Puzzle& puzzle = *p.puzzle;
  std::vector<std::vector<int>> anc(static_cast<std::size_t>(p.depth) + 1, std::vector<int>(p.size()));
  for (std::size_t a = 0; a < p.size(); ++a) {
    int id = p.atoms[a].piece;
    for (int d = p.depth; d >= 0; --d) {
      anc[static_cast<std::size_t>(d)][a] = id;
      if (d > 0) id = puzzle.piece(d, id).parent;
    }
  }
  return anc;
}

Cx nearest_root(Cx w, int l, Cx seed) {
  const Cx r = std::pow(w, 1.0 / l);
  const Cx turn = std::polar(1.0, 2 * std::numbers::pi / l);
  Cx best = r;
  Cx cur = r;
  for (int k = 1; k < l; ++k) {
    cur *= turn;
    if (std::abs(cur - seed) < std::abs(best - seed)) best = cur;
  }
  return best;
}

int image_atom(const Partition& p, std::size_t a) {
  const Puzzle& puzzle = *p.puzzle;
  const int piece = puzzle.locate_angle(p.atoms[a].angle.times(puzzle.degree()), p.depth);
  return p.atom_of_piece[static_cast<std::size_t>(piece)];
}

}  // namespace

double koebe_bound(double rho) { return std::pow((1 + rho) / (1 - rho), 4); }

DistortionReport koebe_check(const BranchDerivative& g, Cx a, double r, double rho, bool certified, int branch) {
  if (!certified) throw Error(ErrorKind::kNotUnivalent, "branch is not certified univalent");
  if (!(rho > 0.0 && rho < 1.0) || !(r > 0.0)) throw Error(ErrorKind::kInvalidArgument, "need 0 < rho < 1 and r > 0");
  DistortionReport rep;
  rep.branch = branch;
  rep.rho = rho;
  rep.bound = koebe_bound(rho);
  rep.certified = true;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  bool lost = false;
  auto visit = [&](Cx z) {
    const auto d = g(z);
    if (!d || !(*d > 0.0) || !std::isfinite(*d)) {
      lost = true;
      return;
    }
    lo = std::min(lo, *d);
    hi = std::max(hi, *d);
  };
  visit(a);
  for (int ring = 1; ring <= 3; ++ring) {
    const int m = 8 << (ring - 1);
    for (int j = 0; j < m; ++j) visit(a + std::polar(rho * r * ring / 3.0, 2 * std::numbers::pi * j / m));
  }
  rep.measured = lost ? std::numeric_limits<double>::infinity() : hi / lo;
  rep.pass = rep.measured <= rep.bound;
  return rep;
}

BranchDerivative inverse_branch(const UnicriticalMap& f, Cx x, int k) {
  std::vector<Cx> chain{x};
  for (int j = 0; j < k; ++j) chain.push_back(f.apply(chain.back()));
  return [f, chain, k](Cx z) -> std::optional<double> {
    if (k == 0) return 1.0;
    std::vector<Cx> cur = chain;
    const Cx a = chain.back();
    const int steps = 64;
    for (int s = 1; s <= steps; ++s) {
      cur[static_cast<std::size_t>(k)] = a + (z - a) * (static_cast<double>(s) / steps);
      for (int j = k - 1; j >= 0; --j) {
        cur[static_cast<std::size_t>(j)] =
            nearest_root(cur[static_cast<std::size_t>(j) + 1] - f.c(), f.degree(), cur[static_cast<std::size_t>(j)]);
      }
    }
    double d = 1.0;
    for (int j = 0; j < k; ++j) d *= std::abs(f.derivative(cur[static_cast<std::size_t>(j)]));
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    return 1.0 / d;
  };
}

std::vector<EntryBranch> sample_entry_branches(const Puzzle& puzzle, const Address& target, std::size_t count,
                                               std::uint64_t seed, int max_k) {
  constexpr std::int64_t kDen = 1000000007;
  const auto& f = puzzle.field().map;
  const int l = puzzle.degree();
  const int d = depth_of(target);
  const auto poly = puzzle.polygon(target);
  const double g_a = puzzle.potential_at(d) / 2;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> pick(1, kDen - 1);
  const auto post = orbit(f, 0.0, static_cast<std::size_t>(max_k)).points;
  std::vector<EntryBranch> out;
  for (std::size_t attempt = 0; out.size() < count && attempt < 400 * count; ++attempt) {
    const Angle theta = Angle::make(pick(rng), kDen);
    int k = 0;
    for (int i = 1; i <= max_k && d + i <= puzzle.depth_limit(); ++i) {
      if (puzzle.address_of(theta.times_power(l, i), d) == target) {
        k = i;
        break;
      }
    }
    if (k == 0) continue;
    const auto pb = pull_back(puzzle, target, SymbolicAngle::exact(theta, l), k);
    EntryBranch br;
    br.target = target;
    br.domain = pb.piece;
    br.angle = theta;
    br.k = k;
    br.univalent = pb.univalent;
    try {
      br.x = ray_point(puzzle.field(), theta, g_a / std::pow(static_cast<double>(l), k));
    } catch (const Error&) {
      continue;
    }
    Cx a = br.x;
    for (int i = 0; i < k; ++i) a = f.apply(a);
    br.a = a;
    if (!point_in_polygon(a, poly)) continue;
    double r = polygon_distance({a}, poly);
    for (int j = 1; j <= k && j < static_cast<int>(post.size()); ++j) r = std::min(r, std::abs(a - post[static_cast<std::size_t>(j)]));
    br.radius = 0.9 * r;
    if (!(br.radius > 0.0)) continue;
    out.push_back(std::move(br));
  }
  return out;
}

DistortionReport koebe_check(const Puzzle& puzzle, const EntryBranch& branch, double rho, int id) {
  return koebe_check(inverse_branch(puzzle.field().map, branch.x, branch.k), branch.a, branch.radius, rho,
                     branch.univalent, id);
}

AtomSet atoms_in(const Partition& partition, const Address& piece) {
  const Puzzle& puzzle = *partition.puzzle;
  Address p = piece;
  while (depth_of(p) > partition.depth) p = puzzle.parent_of(p);
  const int d = depth_of(p);
  const int id = puzzle.id_of(d, p);
  if (id < 0) throw Error(ErrorKind::kInvalidArgument, "piece " + to_string(piece) + " is not materialized");
  AtomSet out(partition.size());
  for (std::size_t a = 0; a < partition.size(); ++a) {
    int cur = partition.atoms[a].piece;
    for (int k = partition.depth; k > d; --k) cur = puzzle.piece(k, cur).parent;
    if (cur == id) out.insert(a);
  }
  return out;
}

AtomSet image_atoms(const Partition& partition, const AtomSet& set, int k) {
  const Puzzle& puzzle = *partition.puzzle;
  const int n = partition.depth;
  if (k < 0 || k > n) throw Error(ErrorKind::kInvalidArgument, "image depth out of range");
  const auto anc = ancestor_table(partition);
  std::vector<bool> hit(puzzle.level(n - k).size(), false);
  for (std::size_t a = 0; a < partition.size(); ++a) {
    if (!set.contains(a)) continue;
    int id = partition.atoms[a].piece;
    for (int j = 0; j < k; ++j) id = puzzle.piece(n - j, id).image;
    hit[static_cast<std::size_t>(id)] = true;
  }
  AtomSet out(partition.size());
  for (std::size_t a = 0; a < partition.size(); ++a) {
    if (hit[static_cast<std::size_t>(anc[static_cast<std::size_t>(n - k)][a])]) out.insert(a);
  }
  return out;
}

TransportCheck density_transport_check(const Partition& partition, const std::vector<double>& weights, double delta,
                                       const AtomSet& a, const AtomSet& b, int k, double slack) {
  if (!a.subset_of(b)) throw Error(ErrorKind::kInvalidArgument, "A must be a subset of B");
  TransportCheck t;
  t.delta = delta;
  t.slack = slack;
  t.dens_ab = density(a, b, weights);
  t.dens_image = density(image_atoms(partition, a, k), image_atoms(partition, b, k), weights);
  const auto m = transfer_matrix(partition, delta);
  double w_lo = std::numeric_limits<double>::infinity();
  double w_hi = 0.0;
  std::vector<double> v(m.n), next(m.n);
  for (std::size_t col = 0; col < m.n; ++col) {
    if (!b.contains(col)) continue;
    std::fill(v.begin(), v.end(), 0.0);
    v[col] = 1.0;
    for (int step = 0; step < k; ++step) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t r = 0; r < m.n; ++r) {
        for (auto q = m.row_ptr[r]; q < m.row_ptr[r + 1]; ++q) next[r] += m.val[q] * v[m.col[q]];
      }
      v.swap(next);
    }
    for (double w : v) {
      if (w > 0.0) {
        w_lo = std::min(w_lo, w);
        w_hi = std::max(w_hi, w);
      }
    }
  }
  // K^delta is the spread of the k-step weights |D f^k|^-delta over B
  const double k_delta = k == 0 ? 1.0 : w_hi / w_lo;
  t.k_measured = delta > 0.0 ? std::pow(k_delta, 1.0 / delta) : 1.0;
  t.pass = t.dens_image >= t.dens_ab / k_delta * (1 - slack) && t.dens_image <= t.dens_ab * k_delta * (1 + slack);
  return t;
}

std::vector<TransportCheck> transport_sweep(const Partition& partition, const std::vector<double>& weights,
                                            double delta, const std::vector<EntryBranch>& branches, std::size_t count,
                                            std::uint64_t seed) {
  struct Domain {
    int k;
    std::vector<std::size_t> members;
  };
  std::vector<Domain> domains;
  for (const auto& br : branches) {
    if (!br.univalent || static_cast<int>(br.domain.size()) - 1 > partition.depth) continue;
    const auto in_q = atoms_in(partition, br.domain);
    Domain d{br.k, {}};
    for (std::size_t a = 0; a < partition.size(); ++a) {
      if (in_q.contains(a)) d.members.push_back(a);
    }
    if (d.members.size() >= 2) domains.push_back(std::move(d));
  }
  std::vector<TransportCheck> out;
  if (domains.empty()) return out;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; out.size() < count; ++i) {
    const auto& d = domains[i % domains.size()];
    AtomSet b(partition.size()), a(partition.size());
    for (auto m : d.members) {
      if (rng() % 2) b.insert(m);
    }
    if (b.count() == 0) b.insert(d.members[rng() % d.members.size()]);
    for (auto m : d.members) {
      if (b.contains(m) && rng() % 2) a.insert(m);
    }
    if (a.count() == 0) {
      for (auto m : d.members) {
        if (b.contains(m)) {
          a.insert(m);
          break;
        }
      }
    }
    out.push_back(density_transport_check(partition, weights, delta, a, b, d.k));
  }
  return out;
}

AtomChain::AtomChain(const Partition& partition, const std::vector<double>& weights) {
  targets_.resize(partition.size());
  cumulative_.resize(partition.size());
  for (std::size_t a = 0; a < partition.size(); ++a) {
    const auto& kids = partition.children[static_cast<std::size_t>(partition.atoms[a].image)];
    double s = 0.0;
    for (int b : kids) {
      s += weights[static_cast<std::size_t>(b)];
      targets_[a].push_back(b);
      cumulative_[a].push_back(s);
    }
    for (auto& c : cumulative_[a]) c /= s;
  }
}

int AtomChain::step(int atom, std::uint64_t& state) const {
  const auto& cum = cumulative_[static_cast<std::size_t>(atom)];
  if (cum.empty()) return -1;
  const double u = uniform(state);
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
  return targets_[static_cast<std::size_t>(atom)][i];
}

std::vector<double> avoidance_curve(const Partition& partition, const std::vector<double>& weights, const AtomSet& u,
                                    int n, int chains, std::uint64_t seed) {
  if (u.count() == 0) throw Error(ErrorKind::kInvalidArgument, "avoidance set U is empty");
  const AtomChain chain(partition, weights);
  std::vector<double> mass(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::size_t a = 0; a < partition.size(); ++a) {
    if (u.contains(a)) continue;
    const double share = weights[a] / chains;
    for (int c = 0; c < chains; ++c) {
      std::uint64_t state = seed * 0x100000001b3ULL + a * static_cast<std::uint64_t>(chains) + static_cast<std::uint64_t>(c);
      int cur = static_cast<int>(a);
      mass[0] += share;
      for (int t = 1; t <= n; ++t) {
        cur = chain.step(cur, state);
        if (cur < 0 || u.contains(static_cast<std::size_t>(cur))) break;
        mass[static_cast<std::size_t>(t)] += share;
      }
    }
  }
  return mass;
}

double avoidance_mass(const Partition& partition, const std::vector<double>& weights, const AtomSet& u, int n,
                      int chains, std::uint64_t seed) {
  return avoidance_curve(partition, weights, u, n, chains, seed).back();
}

std::vector<double> avoidance_curve_exact(const Partition& partition, const std::vector<double>& weights,
                                          const AtomSet& u, int n) {
  const AtomChain chain(partition, weights);
  const std::size_t size = partition.size();
  std::vector<double> p(size), next(size), mass;
  for (std::size_t a = 0; a < size; ++a) p[a] = u.contains(a) ? 0.0 : 1.0;
  auto total = [&] {
    double s = 0.0;
    for (std::size_t a = 0; a < size; ++a) s += weights[a] * p[a];
    return s;
  };
  mass.push_back(total());
  for (int t = 1; t <= n; ++t) {
    for (std::size_t a = 0; a < size; ++a) {
      next[a] = 0.0;
      if (u.contains(a)) continue;
      const auto& cum = chain.transition(static_cast<int>(a));
      const auto& tg = chain.targets(static_cast<int>(a));
      double prev = 0.0;
      for (std::size_t i = 0; i < tg.size(); ++i) {
        next[a] += (cum[i] - prev) * p[static_cast<std::size_t>(tg[i])];
        prev = cum[i];
      }
    }
    p.swap(next);
    mass.push_back(total());
  }
  return mass;
}

AtomSet atoms_near(const Partition& partition, Cx w, double radius) {
  AtomSet out(partition.size());
  for (std::size_t a = 0; a < partition.size(); ++a) {
    if (std::abs(partition.atoms[a].sample - w) < radius) out.insert(a);
  }
  return out;
}

std::vector<double> parabolic_avoidance(const Partition& partition, const std::vector<double>& weights, double radius,
                                        int n, int chains, std::uint64_t seed) {
  const auto fps = fixed_points(partition.puzzle->field().map);
  for (const auto& p : fps.points) {
    if (p.cls == PointClass::kParabolic) {
      return avoidance_curve(partition, weights, atoms_near(partition, p.location, radius), n, chains, seed);
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "map has no parabolic fixed point");
}

std::vector<DensityStep> weak_density_search(const Partition& partition, const std::vector<double>& weights,
                                             const AtomSet& x, int lo, int hi) {
  if (!(x.mass(weights) > 0.0)) throw Error(ErrorKind::kZeroMass, "X has zero mass");
  if (lo < 0 || hi > partition.depth || lo > hi) throw Error(ErrorKind::kInvalidArgument, "depth range outside the partition");
  const Puzzle& puzzle = *partition.puzzle;
  const auto anc = ancestor_table(partition);
  std::vector<DensityStep> out;
  int current = -1;
  for (int d = lo; d <= hi; ++d) {
    const std::size_t pieces = puzzle.level(d).size();
    std::vector<double> total(pieces, 0.0), in_x(pieces, 0.0);
    for (std::size_t a = 0; a < partition.size(); ++a) {
      const auto id = static_cast<std::size_t>(anc[static_cast<std::size_t>(d)][a]);
      total[id] += weights[a];
      if (x.contains(a)) in_x[id] += weights[a];
    }
    int best = -1;
    double best_dens = -1.0;
    for (std::size_t id = 0; id < pieces; ++id) {
      if (current >= 0 && puzzle.piece(d, static_cast<int>(id)).parent != current) continue;
      if (!(total[id] > 0.0)) continue;
      const double dens = in_x[id] / total[id];
      if (dens > best_dens) {
        best_dens = dens;
        best = static_cast<int>(id);
      }
    }
    if (best < 0) break;
    current = best;
    out.push_back({d, puzzle.piece(d, best).address, best_dens});
  }
  return out;
}

AtomSet saturate(const Partition& partition, const AtomSet& y0, int steps) {
  std::vector<int> img(partition.size());
  for (std::size_t a = 0; a < partition.size(); ++a) img[a] = image_atom(partition, a);
  AtomSet y = y0;
  for (int s = 0; s < steps; ++s) {
    AtomSet next = y;
    for (std::size_t a = 0; a < partition.size(); ++a) {
      if (img[a] >= 0 && y.contains(static_cast<std::size_t>(img[a]))) next.insert(a);
    }
    if (next == y) break;
    y = std::move(next);
  }
  return y;
}

std::vector<double> invariant_probe(const Partition& partition, const std::vector<double>& weights, const AtomSet& y0,
                                    const std::vector<Address>& nest, int steps) {
  const AtomSet y = saturate(partition, y0, steps);
  std::vector<double> out;
  for (const auto& v : nest) out.push_back(density(y, atoms_in(partition, v), weights));
  return out;
}

std::vector<double> cover_convergence(const Partition& partition, const std::vector<double>& weights, const AtomSet& x,
                                      const std::vector<Address>& nest, std::uint64_t seed, int horizon) {
  const Puzzle& puzzle = *partition.puzzle;
  std::vector<std::size_t> members;
  std::vector<SymbolicAngle> points;
  for (std::size_t a = 0; a < partition.size(); ++a) {
    if (!x.contains(a)) continue;
    members.push_back(a);
    points.push_back(random_angles_in(puzzle, partition.atoms[a].address, 1, seed + a, horizon + 64).front());
  }
  std::vector<double> out;
  AtomSet prev(partition.size(), true);
  for (const auto& v : nest) {
    const int d = depth_of(v);
    AtomSet o(partition.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      SymbolicAngle y = points[i];
      for (int k = 0; k <= horizon; ++k, y = y.shifted(1)) {
        bool inside = false;
        try {
          inside = puzzle.address_of(y, d) == v;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kAddressUnderflow) throw;
          break;
        }
        if (!inside) continue;
        if (d + k <= partition.depth) {
          o = o.unite(atoms_in(partition, puzzle.address_of(points[i], d + k)));
        } else {
          o.insert(members[i]);
        }
        break;
      }
    }
    o = o.intersect(prev);
    out.push_back(o.mass(weights));
    prev = o;
  }
  return out;
}

std::vector<Address> lab_nest(const Puzzle& puzzle, int levels) {
  std::vector<Address> out;
  try {
    const auto v00 = choose_V00(puzzle);
    const auto nest = principal_nest(puzzle, v00.address, levels);
    for (const auto& level : nest.levels) out.push_back(level.piece);
    if (!out.empty()) return out;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNonRecurrent && e.kind() != ErrorKind::kAddressUnderflow) throw;
  }
  for (int t = 0; t < levels && t <= puzzle.depth_limit(); ++t) out.push_back(*puzzle.critical_address(t));
  return out;
}

}  // namespace puzzlemeasure
