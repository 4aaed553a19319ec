#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "puzzlemeasure/puzzle.hpp"

namespace puzzlemeasure {

inline constexpr int kDefaultHorizon = 100000;
inline constexpr int kDefaultCascadeLength = 10;

/// Least k >= 1 with f^k(x) in V; throws kNoReturnWithinHorizon.
int first_return_time(const UnicriticalMap& f, Cx x, const std::function<bool(Cx)>& in_v, int horizon = kDefaultHorizon);

/// Symbolic version: x is an external angle, V a puzzle piece given by its address.
int first_return_time(const Puzzle& puzzle, const SymbolicAngle& x, const Address& v, int horizon = kDefaultHorizon);

/// The critical point 0 as an angle (a preimage of the critical value's angle).
SymbolicAngle critical_point_angle(const Puzzle& puzzle);

struct PullBack {
  Address piece;               // component of f^{-k}(P) containing x
  bool univalent = true;       // no intermediate piece is critical
  std::vector<Address> chain;  // pieces containing x, f(x), ..., f^k(x)
};

/// Pull P back along x, f(x), ..., f^k(x) (requires f^k(x) in P). Throws kAddressUnderflow
/// when depth(P) + k exceeds the puzzle's symbolic depth.
PullBack pull_back(const Puzzle& puzzle, const Address& p, const SymbolicAngle& x, int k);

/// True when the closure of `inner` lies in `outer`: no boundary landing point in common.
bool compactly_contained(const Puzzle& puzzle, const Address& inner, const Address& outer);

struct V00Choice {
  Address address;
  int return_time = 0;
  double gap = 0.0;       // distance between the polygonal boundaries
  double diameter = 0.0;  // of V^{0,0}
};

/// Shallowest critical piece whose pull-back along the first critical return is compactly
/// contained in it with a numeric gap >= gap_min_rel * diam. Throws kNonRecurrent.
V00Choice choose_V00(const Puzzle& puzzle, int horizon = kDefaultHorizon, double gap_min_rel = 1e-4);

struct NestLevel {
  int t = 0;
  Address piece;  // V^{0,t}
  int return_time = 0;  // l(t)
  bool central = false;
};

struct Nest {
  std::vector<NestLevel> levels;
  std::optional<ErrorKind> stop;  // why the nest ended before T_max
};

Nest principal_nest(const Puzzle& puzzle, const Address& v00, int t_max, int horizon = kDefaultHorizon);

struct CascadeSummary {
  bool first_value = false;
  std::vector<int> runs;             // run lengths of alternating flag values
  std::vector<int> cascade_lengths;  // lengths of the central runs
  bool renormalizable = false;       // trailing central run >= N_cascade
};

CascadeSummary detect_cascades(const std::vector<bool>& central, int n_cascade = kDefaultCascadeLength);
std::vector<bool> decode_cascades(const CascadeSummary& summary);

struct ReturnDomain {
  Address piece;
  int return_time = 0;
  int degree = 1;
  bool critical = false;
};

struct ReturnSystem {
  Address range;
  std::vector<ReturnDomain> domains;  // domains[0] is the critical domain when 0 returns
  std::size_t samples = 0;
  std::size_t returned = 0;
  double coverage() const { return samples ? static_cast<double>(returned) / static_cast<double>(samples) : 0.0; }
};

/// Random points of a piece as digit streams: a prefix inside one of its gaps (chosen by
/// length) followed by `tail` random digits.
std::vector<SymbolicAngle> random_angles_in(const Puzzle& puzzle, const Address& piece, std::size_t count,
                                            std::uint64_t seed, int tail = 512);

/// First-return domains of V discovered from the critical orbit plus the given samples.
ReturnSystem build_return_system(const Puzzle& puzzle, const Address& v, const std::vector<SymbolicAngle>& samples,
                                 int horizon = kDefaultHorizon);

struct UnbranchedResult {
  bool unbranched = true;
  std::optional<int> witness;  // critical-orbit time entering V off the g-orbit of 0
};

UnbranchedResult unbranched_check(const Puzzle& puzzle, const ReturnSystem& system, int horizon = kDefaultHorizon);

}  // namespace puzzlemeasure
