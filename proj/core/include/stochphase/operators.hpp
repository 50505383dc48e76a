#pragma once

#include "stochphase/grid.hpp"
#include "stochphase/models.hpp"

#include <Eigen/SparseCore>

#include <complex>
#include <memory>
#include <vector>

namespace stochphase {

enum class OperatorKind { kBackward, kForward };

/// Reflecting boundaries on both circles: zero conormal derivative for the
/// backward operator, zero normal flux for the forward operator.
enum class BoundaryCondition { kReflecting };

struct SparseOperator {
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  std::shared_ptr<const AnnulusGrid> grid;
  Matrix matrix;
  OperatorKind kind = OperatorKind::kBackward;
  BoundaryCondition boundary = BoundaryCondition::kReflecting;

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return matrix * v; }
};

struct AssemblyReport {
  double max_peclet = 0.0;
  int high_peclet_nodes = 0;  ///< nodes whose cell Péclet number exceeds 2
};

/// Generator coefficients pulled back to (alpha, beta): the Itô drift of the
/// coordinates and the contravariant diffusion tensor, plus the area Jacobian.
struct ComputationalCoefficients {
  double jacobian = 0.0;
  double drift_alpha = 0.0;
  double drift_beta = 0.0;
  double diff_aa = 0.0;
  double diff_bb = 0.0;
  double diff_ab = 0.0;
};

ComputationalCoefficients computational_coefficients(
    const OscillatorModel& model, const AnnulusGrid& grid, double alpha,
    double beta);

/// Backward Kolmogorov operator L† on the grid.
///
/// Written as (1/J) ∂_k (J D̃_kk ∂_k u) + c_k ∂_k u + 2 D̃_ab ∂_ab u, with
/// c_k = b̃_k - (1/J) ∂_k (J D̃_kk), and discretised edge by edge: second
/// order central in the interior, rows sum to zero, and the boundary rows
/// carry the reflecting condition. The forward operator is its adjoint with
/// respect to the grid quadrature.
SparseOperator assemble_backward(const OscillatorModel& model,
                                 std::shared_ptr<const AnnulusGrid> grid,
                                 AssemblyReport* report = nullptr);

/// Fokker-Planck operator L = W⁻¹ (L†)ᵀ W; conserves Σ w p exactly.
SparseOperator assemble_forward(const OscillatorModel& model,
                                std::shared_ptr<const AnnulusGrid> grid,
                                AssemblyReport* report = nullptr);

SparseOperator forward_from_backward(const SparseOperator& backward);

/// Applies an operator whose rows act on differences to a lifted field; the
/// alpha seam is crossed with the slope taken into account.
Eigen::VectorXd apply_lifted(const SparseOperator& op, const LiftedField& f);

/// L†[alpha] with seam-corrected differences.
Eigen::VectorXd apply_to_alpha(const SparseOperator& op);

/// Matrix-free evaluation of the same backward discretisation with node
/// spacing `stride` (1 reproduces the matrix on interior rows). Rows closer
/// than `stride` to a boundary are returned as NaN. Used for Richardson-style
/// truncation estimates.
Eigen::VectorXd apply_backward_stencil(const OscillatorModel& model,
                                       const AnnulusGrid& grid,
                                       const LiftedField& f, int stride);
Eigen::VectorXcd apply_backward_stencil(const OscillatorModel& model,
                                        const AnnulusGrid& grid,
                                        const Eigen::VectorXcd& f, int stride);

/// Probability flux through each grid edge, G_e = κ_e (p_P - p_Q) + φ_e
/// (p_P + p_Q)/2, for a density p; the discrete counterpart of J·n dl.
struct EdgeFluxes {
  /// alpha_flux[j * n_alpha + i]: flux from node (i, j) to (i+1, j).
  Eigen::VectorXd alpha_flux;
  /// beta_flux[j * n_alpha + i]: flux from node (i, j) to (i, j+1);
  /// entries with j = n_beta - 1 are zero.
  Eigen::VectorXd beta_flux;
};

EdgeFluxes edge_fluxes(const OscillatorModel& model, const AnnulusGrid& grid,
                       const Eigen::VectorXd& density);

/// Null vector of the forward operator normalised to Σ w p = 1.
/// Throws SingularSystemError if the null space is not one-dimensional.
struct StationaryDiagnostics {
  double residual = 0.0;          ///< ‖L p‖∞ / (‖L‖∞ ‖p‖∞)
  double min_before_clip = 0.0;   ///< most negative entry before clipping
  int clipped_nodes = 0;           ///< entries in [-1e-10 max, 0) set to zero
};

ScalarField stationary_density(const SparseOperator& forward,
                               StationaryDiagnostics* diagnostics = nullptr);

/// Stationary probability current. `j_alpha`, `j_beta` are the flux
/// densities |J| J·∇alpha and |J| J·∇beta (so ∫ j_alpha dbeta is the flux
/// through an alpha-section); `jx`, `jy` are Cartesian. `section_flux[i]` is
/// the conservative edge flux through the section between alpha columns i and
/// i+1.
struct CurrentField {
  std::shared_ptr<const AnnulusGrid> grid;
  Eigen::VectorXd j_alpha;
  Eigen::VectorXd j_beta;
  Eigen::VectorXd jx;
  Eigen::VectorXd jy;
  std::vector<double> section_flux;

  /// (1/|J|)(∂_alpha j_alpha + ∂_beta j_beta) by central differences;
  /// NaN on boundary rows.
  Eigen::VectorXd divergence() const;
};

CurrentField probability_current(const OscillatorModel& model,
                                 std::shared_ptr<const AnnulusGrid> grid,
                                 const ScalarField& density);

struct MeanPeriod {
  double Tbar = 0.0;
  double mean_flux = 0.0;
  double relative_spread = 0.0;  ///< (max - min) / mean over sections
  double quadrature_flux = 0.0;  ///< trapezoid ∫ j_alpha dbeta averaged over α
};

/// T̄ = 1 / ∫ j_alpha dbeta. Throws NonOscillatoryError if the flux is not
/// positive or varies by more than `max_spread` across sections.
MeanPeriod mean_period(const CurrentField& current, double max_spread = 0.05);

/// Writes (row, col, value) triplets.
void write_operator_coo(const SparseOperator& op, const std::string& path);

}  // namespace stochphase
