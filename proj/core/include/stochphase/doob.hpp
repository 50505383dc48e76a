#pragma once

#include "stochphase/grid.hpp"
#include "stochphase/models.hpp"
#include "stochphase/operators.hpp"
#include "stochphase/simulate.hpp"
#include "stochphase/spectral.hpp"

#include <memory>
#include <variant>

namespace stochphase {

/// f in L^{h,f} = h⁻¹ L† h - f: either a constant (classical transform with
/// an eigenvalue) or h⁻¹ L†[h], which makes the transformed process
/// conservative.
struct ConservativePotential {};
using DoobPotential = std::variant<double, ConservativePotential>;

/// φ ↦ h⁻¹ L†[h φ] - f φ by diagonal scaling of the assembled matrix. With
/// the conservative choice the diagonal is set so that rows sum to zero.
SparseOperator doob_generator(const SparseOperator& backward,
                              const ScalarField& h,
                              const DoobPotential& potential);

/// Diffusion with drift f + 2 D ∇ln h and unchanged noise. The correction is
/// tabulated on the grid nodes and bilinearly interpolated; evaluation outside
/// the annulus throws DomainError.
class DoobTransformedModel {
 public:
  DoobTransformedModel(const OscillatorModel& base, const ScalarField& h);

  const OscillatorModel& base() const noexcept { return base_; }
  const OscillatorModel& model() const noexcept { return model_; }
  const ScalarField& h() const noexcept { return h_; }
  const ScalarField& correction_x() const noexcept { return cx_; }
  const ScalarField& correction_y() const noexcept { return cy_; }
  Vec2 correction(const Vec2& x) const;

 private:
  OscillatorModel base_;
  ScalarField h_;
  ScalarField cx_;
  ScalarField cy_;
  OscillatorModel model_;
};

DoobTransformedModel doob_transformed_model(const OscillatorModel& model,
                                            const ScalarField& h);

/// Cartesian gradient of ln h at the nodes (central differences, second-order
/// one-sided on the boundary circles).
std::pair<Eigen::VectorXd, Eigen::VectorXd> grad_log(const ScalarField& h);

struct PhaseVelocity {
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
};

/// Ensemble mean of (ψ(x_t) - ψ(x_0)) / t, ψ unwrapped along each path,
/// after discarding `burn_in_fraction` of each trajectory.
PhaseVelocity mean_phase_velocity(const OscillatorModel& model,
                                  const LiftedField& psi, const SimConfig& cfg,
                                  double burn_in_fraction = 0.0);

/// Same measurement on the transformed process; expected to equal ω₁.
PhaseVelocity conditioned_phase_velocity(const DoobTransformedModel& model,
                                         const SpectralSolution& spectral,
                                         const SimConfig& cfg);

}  // namespace stochphase
