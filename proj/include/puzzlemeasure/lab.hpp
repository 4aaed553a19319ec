#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "puzzlemeasure/measure.hpp"
#include "puzzlemeasure/nest.hpp"

namespace puzzlemeasure {

/// ((1 + rho) / (1 - rho))^4
double koebe_bound(double rho);

struct DistortionReport {
  int branch = 0;
  double rho = 0.0;
  double measured = 1.0;  // sup / inf of |Dg| over the rho-subdisc
  double bound = 1.0;
  bool certified = false;
  bool pass = false;
};

/// |Dg(z)| for the branch under test, or nullopt where it cannot be continued.
using BranchDerivative = std::function<std::optional<double>(Cx)>;

/// Samples |Dg| on the closed disc of radius rho * r about a. Throws kNotUnivalent when the
/// branch is not certified.
DistortionReport koebe_check(const BranchDerivative& g, Cx a, double r, double rho, bool certified, int branch = 0);

/// The inverse branch of f^k that sends f^k(x) back to x, continued along straight paths.
/// Dg is 1 / |D(f^k)| at the continued preimage.
BranchDerivative inverse_branch(const UnicriticalMap& f, Cx x, int k);

/// A first-entry branch f^k : Q -> P with a protecting disc D(a, r) inside P.
struct EntryBranch {
  Address target;  // P
  Address domain;  // Q, the pull-back of P along x
  Angle angle;     // external angle of x
  int k = 0;
  bool univalent = false;
  Cx x;
  Cx a;             // f^k(x)
  double radius = 0.0;
};

/// Random x on rays N / D (D = 10^9 + 7) whose orbit first enters P at some 1 <= k <= max_k, kept
/// when D(f^k(x), r) sits inside P's polygon with r > 0.
std::vector<EntryBranch> sample_entry_branches(const Puzzle& puzzle, const Address& target, std::size_t count,
                                               std::uint64_t seed, int max_k = 24);

DistortionReport koebe_check(const Puzzle& puzzle, const EntryBranch& branch, double rho, int id = 0);

/// Atoms of the partition inside a piece of depth <= partition depth.
AtomSet atoms_in(const Partition& partition, const Address& piece);

/// Depth-(depth - k) image of an atom under f^k, as the atoms it contains.
AtomSet image_atoms(const Partition& partition, const AtomSet& set, int k);

struct TransportCheck {
  double dens_ab = 0.0;
  double dens_image = 0.0;
  double k_measured = 1.0;  // discrete distortion of |D f^k| over B
  double delta = 0.0;
  double slack = 0.0;       // relative tolerance on both inequalities
  bool pass = false;
};

/// K^-delta dens(A|B) <= dens(f^k A | f^k B) <= K^delta dens(A|B) with K read off the k-step
/// transfer weights of the atoms of B. A must be a subset of B, both inside a univalent domain.
TransportCheck density_transport_check(const Partition& partition, const std::vector<double>& weights, double delta,
                                       const AtomSet& a, const AtomSet& b, int k, double slack = 1e-9);

/// Random pairs A ⊂ B of atoms inside the domains of univalent branches, cycling through the
/// branches until `count` checks ran. Empty when no branch domain holds two atoms.
std::vector<TransportCheck> transport_sweep(const Partition& partition, const std::vector<double>& weights,
                                            double delta, const std::vector<EntryBranch>& branches, std::size_t count,
                                            std::uint64_t seed);

/// mu-typical orbits of atoms: a Markov chain that moves from atom a to an atom b inside f(a)
/// with probability mu(b) / mu(f(a)).
class AtomChain {
 public:
  AtomChain(const Partition& partition, const std::vector<double>& weights);
  int step(int atom, std::uint64_t& state) const;
  const std::vector<double>& transition(int atom) const { return cumulative_[static_cast<std::size_t>(atom)]; }
  const std::vector<int>& targets(int atom) const { return targets_[static_cast<std::size_t>(atom)]; }

 private:
  std::vector<std::vector<int>> targets_;
  std::vector<std::vector<double>> cumulative_;
};

/// mu-mass of atoms whose sampled orbits stay out of U through step t, for t = 0..n. Each atom
/// runs `chains` orbits; its avoiding fraction is weighted by mu.
std::vector<double> avoidance_curve(const Partition& partition, const std::vector<double>& weights, const AtomSet& u,
                                    int n, int chains = 16, std::uint64_t seed = 1);
double avoidance_mass(const Partition& partition, const std::vector<double>& weights, const AtomSet& u, int n,
                      int chains = 16, std::uint64_t seed = 1);

/// Expected value of the same quantity, by the killed-chain recursion.
std::vector<double> avoidance_curve_exact(const Partition& partition, const std::vector<double>& weights,
                                          const AtomSet& u, int n);

/// Atoms whose samples lie within radius of w.
AtomSet atoms_near(const Partition& partition, Cx w, double radius);

/// Parabolic variant: U is the radius-neighbourhood of the parabolic fixed point.
/// Throws kInvalidArgument when f has no parabolic fixed point.
std::vector<double> parabolic_avoidance(const Partition& partition, const std::vector<double>& weights, double radius,
                                        int n, int chains = 16, std::uint64_t seed = 1);

struct DensityStep {
  int depth = 0;
  Address piece;
  double density = 0.0;
};

/// Greedy descent from depth lo to hi through children maximizing dens(X | piece).
/// Throws kZeroMass.
std::vector<DensityStep> weak_density_search(const Partition& partition, const std::vector<double>& weights,
                                             const AtomSet& x, int lo, int hi);

/// Y := Y u f^-1(Y) on atoms, steps times. An atom is in f^-1(Y) when the image of its sample is.
AtomSet saturate(const Partition& partition, const AtomSet& y0, int steps);

/// dens(Y | V) for each V of the nest, after saturating Y0.
std::vector<double> invariant_probe(const Partition& partition, const std::vector<double>& weights, const AtomSet& y0,
                                    const std::vector<Address>& nest, int steps);

/// mu(O_t) where O_t is the union of pull-backs of nest[t] along first entries of one random
/// point per atom of X, intersected with O_{t-1}.
std::vector<double> cover_convergence(const Partition& partition, const std::vector<double>& weights, const AtomSet& x,
                                      const std::vector<Address>& nest, std::uint64_t seed = 1, int horizon = 4096);

/// V^{0,t} from the principal nest when the critical point is recurrent, else the critical
/// pieces Y^t(0).
std::vector<Address> lab_nest(const Puzzle& puzzle, int levels);

}  // namespace puzzlemeasure
