#pragma once

#include <functional>
#include <string>
#include <vector>

#include "puzzlemeasure/dynamics.hpp"

namespace puzzlemeasure {

/// Square lattice origin + spacing * (i, j), 0 <= i, j < n.
struct GridFrame {
  Cx origin;
  double spacing = 0.0;
  int n = 0;

  Cx node(int i, int j) const { return origin + Cx(spacing * i, spacing * j); }
};

/// Frame covering the bounding box of a polygon with a three-cell margin.
GridFrame frame_for(const std::vector<Cx>& outer, int grid_n);

struct ModulusEstimate {
  double lower = 0.0;
  double estimate = 0.0;
  double upper = 0.0;
  std::string method;
  int grid_n = 0;
  int cg_iterations = 0;
};

using Region = std::function<bool(Cx)>;

/// Discrete extremal length of the annulus {in outer} minus {in inner}: the five-point Dirichlet
/// energy E of the potential that is 0 on the inner set and 1 off the outer set gives mod = 1/E.
/// lower / upper come from growing / shrinking both boundary sets by one lattice layer.
/// Throws kDegenerateAnnulus when the sets come within two lattice steps.
ModulusEstimate annulus_modulus(const Region& outer, const Region& inner, const GridFrame& frame);

ModulusEstimate annulus_modulus(const std::vector<Cx>& outer, const std::vector<Cx>& inner, int grid_n);

/// (1/2pi) log(R/r)
double round_annulus_modulus(double r, double big_r);

}  // namespace puzzlemeasure
