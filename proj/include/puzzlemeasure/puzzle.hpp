#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "puzzlemeasure/potential.hpp"
#include "puzzlemeasure/symbolic_angle.hpp"

namespace puzzlemeasure {

/// Depth-0 id followed by one branch per depth: the wedge index of the piece relative to the
/// critical value's cut, or -1 when the piece is critical. The image of a piece has the
/// truncated address.
using Address = std::vector<int>;

std::string to_string(const Address& a);

/// Angular interval (start, start + length) with numerators over the depth's common denominator.
struct Gap {
  std::int64_t start = 0;
  std::int64_t length = 0;
};

struct PuzzlePiece {
  int depth = 0;
  int id = -1;
  Address address;
  bool critical = false;
  std::vector<Gap> gaps;  // sorted by start
  int parent = -1;        // id at depth - 1
  int image = -1;         // id at depth - 1
};

struct BoundarySegment {
  enum class Kind { kRay, kArc };
  Kind kind;
  Angle from;  // ray: the angle; arc: counterclockwise start
  Angle to;    // ray: same angle; arc: end
  double g_from;
  double g_to;
};

struct PuzzleOptions {
  double g0 = 1.0;
  /// Co-landing depth-0 angle sets. Empty means: the cycle at the dividing fixed point, or
  /// the single ray 0 when that point is not repelling.
  std::vector<std::vector<Angle>> stars;
  int cycle_search_cap = kDefaultCycleSearchCap;
  int depth_limit = 48;
};

/// Angle of the critical value c as seen from escaping neighbours; exact when a small-denominator
/// rational ray is confirmed to land at c.
SymbolicAngle critical_value_angle(const PotentialField& field);

/// Yoccoz puzzle in angle space. Pieces of any depth up to depth_limit() are available through
/// their addresses; levels up to refined_depth() are also materialized with parent/image links.
class Puzzle {
 public:
  explicit Puzzle(const PotentialField& field, PuzzleOptions options = {});

  const PotentialField& field() const noexcept { return field_; }
  int degree() const noexcept { return field_.map.degree(); }
  double g0() const noexcept { return g0_; }
  bool jordan_mode() const noexcept { return jordan_; }
  const std::vector<std::vector<Angle>>& depth0_stars() const noexcept { return stars0_; }
  const std::vector<Angle>& depth0_angles() const noexcept { return theta0_; }
  std::optional<SymbolicAngle> critical_value_angle() const { return theta_c_; }
  std::optional<Cx> dividing_point() const noexcept { return alpha_; }

  double potential_at(int depth) const;
  std::int64_t denominator(int depth) const;
  int depth_limit() const noexcept { return depth_limit_; }

  // --- symbolic layer ---
  Address address_of(const SymbolicAngle& theta, int depth) const;
  Address address_of(const Angle& theta, int depth) const;
  /// Address of Y^depth(0); nullopt in Jordan mode.
  std::optional<Address> critical_address(int depth) const;
  bool is_critical(const Address& a) const;
  std::vector<Gap> gaps_of(const Address& a) const;
  Address parent_of(const Address& a) const;
  static Address image_of(const Address& a);
  /// All depth-`depth` angles landing together with theta (theta itself a boundary angle).
  std::vector<Angle> star_of(const Angle& theta, int depth) const;
  /// Ray and arc pieces of the boundary in traversal order.
  std::vector<BoundarySegment> boundary(const Address& a) const;
  /// Angle in the middle of the longest gap; always interior to the piece.
  Angle interior_angle(const Address& a) const;

  // --- materialized layer ---
  void refine(int depth);
  int refined_depth() const noexcept { return static_cast<int>(levels_.size()) - 1; }
  const std::vector<PuzzlePiece>& level(int depth) const;
  const PuzzlePiece& piece(int depth, int id) const { return level(depth).at(static_cast<std::size_t>(id)); }
  int id_of(int depth, const Address& a) const;
  int map_piece(int depth, int id) const;
  int critical_piece(int depth) const;
  /// Piece at `depth` containing an angle (throws kOnBoundary for boundary angles).
  int locate_angle(const Angle& theta, int depth) const;

  // --- geometry ---
  /// Address of the depth-n piece containing x, located through external angles.
  Address locate_address(Cx x, int depth) const;
  int locate(Cx x, int depth) const;
  std::vector<Cx> polygon(const Address& a, double g_low = 1e-7, int steps_per_halving = 6) const;

 private:
  Angle theta_star(int depth) const;  // cut angle used to lift depth -> depth + 1
  int depth0_gap(const SymbolicAngle& theta) const;
  int wedge(const SymbolicAngle& theta, int depth) const;  // theta at depth + 1
  void materialize_level0();
  void materialize_next();

  PotentialField field_;
  double g0_;
  bool jordan_ = false;
  std::optional<Cx> alpha_;
  std::vector<std::vector<Angle>> stars0_;
  std::vector<Angle> theta0_;             // sorted depth-0 angles
  std::vector<int> gap_piece0_;           // depth-0 gap index -> depth-0 piece id
  std::vector<std::vector<int>> piece_gaps0_;
  std::int64_t den0_ = 1;
  int depth_limit_ = 0;
  std::optional<SymbolicAngle> theta_c_;
  std::vector<std::int64_t> theta_star_num_;  // over 2 * D_depth
  std::vector<Address> cv_address_;           // critical value piece per depth

  std::vector<std::vector<PuzzlePiece>> levels_;
  std::vector<std::map<Address, int>> index_;
  std::vector<std::vector<std::pair<std::int64_t, int>>> gap_table_;  // (start, piece id)
};

struct NestDiameter {
  int depth;
  Address address;
  double diameter;
};

/// Y^0(0) ⊃ Y^1(0) ⊃ ... ⊃ Y^N(0) with polygon diameters.
std::vector<NestDiameter> critical_nest(const Puzzle& puzzle, int depth);

double polygon_diameter(const std::vector<Cx>& points);
bool point_in_polygon(Cx z, const std::vector<Cx>& polygon);
double polygon_distance(const std::vector<Cx>& a, const std::vector<Cx>& b);

}  // namespace puzzlemeasure
