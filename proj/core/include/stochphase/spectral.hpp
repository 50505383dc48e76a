#pragma once

#include "stochphase/grid.hpp"
#include "stochphase/models.hpp"
#include "stochphase/operators.hpp"
#include "stochphase/simulate.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace stochphase {

struct EigenOptions {
  /// Shift for shift-invert; defaults to i·omega_guess.
  std::optional<std::complex<double>> shift;
  double omega_guess = 1.0;
  int krylov_dim = 40;
  int max_restarts = 30;
  double tolerance = 1e-10;     ///< Ritz residual in the inverted space
  double refine_tolerance = 1e-11;  ///< final ‖L†Q - λQ‖/‖Q‖ target
};

struct RitzPair {
  std::complex<double> lambda;
  Eigen::VectorXcd vector;
  double residual = 0.0;  ///< ‖L†v - λv‖ / ‖v‖ on the discrete operator
};

/// Eigenpairs of L† closest to `shift` by shift-invert Arnoldi, sorted by
/// distance to the shift.
std::vector<RitzPair> eigenpairs_near(const SparseOperator& backward,
                                      std::complex<double> shift, int count,
                                      const EigenOptions& options = {});

struct Eigenpair {
  std::complex<double> lambda;
  ComplexField Q;
  double residual = 0.0;
  std::vector<std::complex<double>> ritz_values;
};

/// Slowest-decaying non-trivial complex eigenpair, resolved to Im λ > 0.
/// Q has unit grid L² norm and arg Q = 0 at the anchor node. Throws
/// EigenSolverError if the leading non-trivial eigenvalue is real or not
/// simple.
Eigenpair leading_eigenpair(const SparseOperator& backward,
                            const EigenOptions& options = {});

struct PhaseAmplitude {
  ScalarField u;
  LiftedField psi;
  int winding = 0;
};

/// u = |Q|, psi = arg Q unwrapped along alpha (slope = winding). Throws
/// ZeroCrossingError if |Q| < eps·max|Q| on an unmasked node.
PhaseAmplitude phase_amplitude(const ComplexField& Q,
                               const std::vector<bool>& mask = {},
                               double eps = 1e-8);

/// Ω = 2 Σ D_ij ∂_i ln u ∂_j psi by central differences with node spacing
/// `stride`; NaN where u is non-positive or the stencil leaves the grid.
Eigen::VectorXd omega_values(const ScalarField& u, const LiftedField& psi,
                             const OscillatorModel& model, int stride = 1);

ScalarField omega_field(const ScalarField& u, const LiftedField& psi,
                        const OscillatorModel& model);

/// Δω = 2π/T̄ - ω₁.
double delta_omega(double Tbar, double omega1);

struct SpectralSolution {
  std::complex<double> lambda1;
  double mu1 = 0.0;
  double omega1 = 0.0;       ///< Im λ₁
  double arg_lambda1 = 0.0;  ///< arg λ₁, reported alongside
  ComplexField Q;
  ScalarField u;
  LiftedField psi;
  ScalarField omega;          ///< Ω
  ScalarField generator_psi;  ///< L†ψ on the grid
  double Tbar = 0.0;
  double delta_omega = 0.0;
  int winding = 0;
  double eigen_residual = 0.0;
  std::vector<bool> mask;
};

/// Eigenpair, polar split, Ω and Δω in one pass.
SpectralSolution solve_spectral(const OscillatorModel& model,
                                const SparseOperator& backward, double Tbar,
                                const std::vector<bool>& mask = {},
                                EigenOptions options = {});

struct DecompositionResult {
  std::vector<double> total;      ///< per trajectory Δψ / t
  std::vector<double> dynamical;  ///< ∫ L†ψ dt / t
  std::vector<double> geometric;  ///< ∫ Ω dt / t
  double mean_total = 0.0, se_total = 0.0;
  double mean_dynamical = 0.0, se_dynamical = 0.0;
  double mean_geometric = 0.0, se_geometric = 0.0;
  double identity_residual = 0.0;  ///< |mean dyn + mean geo - ω₁|
  double masked_fraction = 0.0;
};

/// Total, dynamical and geometric angular velocities along each path; fields
/// are bilinearly interpolated. Points outside the annulus are masked and
/// more than 10% masked samples is an error.
DecompositionResult phase_decomposition(const TrajectoryEnsemble& ensemble,
                                        const SpectralSolution& spectral,
                                        const OscillatorModel& model,
                                        double burn_in_fraction = 0.2);

/// Stationary average ∫ F P₀ over the grid (masked/NaN nodes skipped).
double stationary_average(const Eigen::VectorXd& field,
                          const ScalarField& density);

}  // namespace stochphase
