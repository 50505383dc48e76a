#pragma once

#include "stochphase/grid.hpp"
#include "stochphase/operators.hpp"

#include <optional>
#include <vector>

namespace stochphase {

struct MrtOptions {
  /// T₀ in Θ = (2π/T̄)(T₀ - T). Default anchors Θ = 0 at grid.anchor_node().
  std::optional<double> reference_time;
  /// Allowed |⟨P₀, rhs⟩| of the periodic problem relative to 1.
  double compatibility_tolerance = 1e-6;
};

struct MrtSolution {
  LiftedField T;       ///< mean return time, slope -T̄/2π
  double Tbar = 0.0;
  LiftedField theta;   ///< MRT phase, slope +1
  ScalarField theta_wrapped;  ///< Θ reduced to [0, 2π)
  double reference_time = 0.0;
  double fredholm_residual = 0.0;
};

/// Solves L†T = -1 with reflecting radial boundaries and a drop of T̄ per
/// counter-clockwise winding. T = -T̄ alpha/2π + S with S periodic, mean-zero
/// under the grid quadrature, and L†S = -1 + (T̄/2π) L†[alpha]. Throws
/// SingularSystemError when the periodic problem is incompatible with T̄.
MrtSolution solve_mrt(const SparseOperator& backward, double Tbar,
                      const MrtOptions& options = {});

struct Polyline {
  double level = 0.0;
  std::vector<Vec2> vertices;
};

/// Marching-squares contour of a phase field at `level`, treating 0 and 2π as
/// the same value. Throws DomainError if nothing is found.
std::vector<Polyline> isochron_extract(const LiftedField& phase, double level);

/// Point at radius `r` on the level set {phase = level}, found by bracketing
/// in alpha on the interpolated field.
Vec2 point_on_isochron(const LiftedField& phase, double level, double r);

}  // namespace stochphase
