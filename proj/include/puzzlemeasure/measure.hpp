#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "puzzlemeasure/puzzle.hpp"

namespace puzzlemeasure {

struct Atom {
  int piece = -1;  // id at the partition depth
  Address address;
  bool critical = false;
  Angle angle;            // ray through the sample
  Cx sample;
  double potential = 0.0;  // of the sample
  int image = -1;          // id of f(piece) one depth up
};

/// A preimage y of an atom's sample, lying in atom `atom`.
struct Branch {
  int atom = -1;
  Cx point;
  double log_df = 0.0;  // log |Df(y)|
};

struct Partition {
  const Puzzle* puzzle = nullptr;
  int depth = 0;
  std::vector<Atom> atoms;
  std::vector<std::vector<Branch>> branches;  // per atom: its preimage samples
  std::vector<std::vector<int>> children;     // depth-1 piece id -> atoms inside it
  std::vector<int> atom_of_piece;             // -1 for dropped pieces
  std::size_t dropped_atoms = 0;
  std::size_t dropped_branches = 0;  // preimages within 1e-12 of the critical point

  std::size_t size() const { return atoms.size(); }
};

inline constexpr double kSamplePotential = 1e-8;  // relative to G0

/// One sample per depth-n piece: the point at potential kSamplePotential * G0 on a ray a third of
/// the way into the piece's widest gap, plus its l preimages on the rays (theta + j) / l.
/// Throws kEmptyPartition when no atom survives.
Partition build_partition(Puzzle& puzzle, int depth, double sample_potential = kSamplePotential);

/// Row a holds |Df(y)|^-delta at column b for every preimage y of sample(a) inside atom b.
struct TransferMatrix {
  std::size_t n = 0;
  std::vector<std::uint32_t> row_ptr, col;
  std::vector<double> val;
  std::vector<std::uint32_t> t_row_ptr, t_col;  // transpose
  std::vector<double> t_val;

  double entry(std::size_t a, std::size_t b) const;
  std::vector<double> row_sums() const;
};

TransferMatrix transfer_matrix(const Partition& partition, double delta);

struct PowerResult {
  double eigenvalue = 0.0;
  std::vector<double> vector;  // positive, sums to 1
  int iterations = 0;
};

inline constexpr int kPowerIterationMax = 200000;

/// Dominant eigenpair of M (right) or M^T (left) by normalized power iteration from a random
/// positive start (seed 0: the uniform vector).
PowerResult power_iteration(const TransferMatrix& m, bool left, std::uint64_t seed = 0, double tol = 1e-10);

/// log of the spectral radius.
double pressure(const Partition& partition, double delta);

inline constexpr double kDeltaHigh = 4.0;

/// Bisection root of pressure on [0, 4]; throws kNoBracket.
double find_delta(const Partition& partition, double tol = 1e-4);

/// Left eigenvector of the transfer matrix, normalized to mass 1.
std::vector<double> eigenmeasure(const Partition& partition, double delta, std::uint64_t seed = 0);

struct ConformalEstimate {
  double delta = 0.0;
  std::vector<double> weights;
  double eigenvalue = 1.0;
  double pressure_residual = 0.0;
  double conformality_residual = 0.0;
  double relative_conformality_residual = 0.0;
};

ConformalEstimate estimate_conformal(const Partition& partition, double tol = 1e-4, std::uint64_t seed = 0);

struct ConformalityDefect {
  double absolute = 0.0;  // max |mu(f(A)) - |Df(s_A)|^delta mu(A)| over non-critical atoms
  double relative = 0.0;  // the same divided by mu(f(A))
};

ConformalityDefect conformality_defect(const Partition& partition, const std::vector<double>& weights, double delta);
double conformality_residual(const Partition& partition, const std::vector<double>& weights, double delta);

/// Atoms of one partition as a membership set.
class AtomSet {
 public:
  AtomSet() = default;
  explicit AtomSet(std::size_t n, bool value = false) : bits_(n, value) {}

  std::size_t size() const { return bits_.size(); }
  bool contains(std::size_t a) const { return bits_[a]; }
  void insert(std::size_t a) { bits_[a] = true; }
  void erase(std::size_t a) { bits_[a] = false; }
  std::size_t count() const;
  double mass(const std::vector<double>& weights) const;

  AtomSet complement() const;
  AtomSet intersect(const AtomSet& other) const;
  AtomSet unite(const AtomSet& other) const;
  bool subset_of(const AtomSet& other) const;

  friend bool operator==(const AtomSet&, const AtomSet&) = default;

 private:
  std::vector<bool> bits_;
};

/// mu(X & Y) / mu(Y); throws kZeroDenominator.
double density(const AtomSet& x, const AtomSet& y, const std::vector<double>& weights);

double total_variation(const std::vector<double>& a, const std::vector<double>& b);

/// CSV: atom_id,depth,address,weight,df_delta,image_atom_ids
void write_partition_csv(std::ostream& out, const Partition& partition, const ConformalEstimate& estimate);

}  // namespace puzzlemeasure
