#pragma once

#include "stochphase/models.hpp"

#include <functional>
#include <vector>

namespace stochphase {

struct LimitCycleOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
  double ode_abs_tol = 1e-13;
  double ode_rel_tol = 1e-13;
  int samples = 2000;       ///< n uniform samples over one period
  double max_time = 1e3;    ///< give up if no section return within this time
  double collapse_radius = 1e-6;  ///< |F| below this means a fixed point
};

struct LimitCycle {
  double period = 0.0;
  std::vector<double> times;  ///< n + 1 uniform times on [0, T]
  std::vector<Vec2> states;   ///< U(t_k); states.front() ≈ states.back()
  double closure_error = 0.0;  ///< ‖U(0) - U(T)‖
  int iterations = 0;
};

/// Poincaré-section shooting on the deterministic part of `model` from
/// `guess`. The section is the line through the guess orthogonal to the
/// drift there. Throws NonOscillatoryError when the orbit spirals into a
/// fixed point and DomainError on non-convergence.
LimitCycle find_limit_cycle(const OscillatorModel& model, const Vec2& guess,
                            const LimitCycleOptions& options = {});

enum class PhaseNormalization {
  kAngular,  ///< Z·F = 2π/T (phase in radians)
  kTime,     ///< Z·F = 1 (phase in time units)
};

struct AdjointOptions {
  PhaseNormalization normalization = PhaseNormalization::kAngular;
  int max_periods = 200;
  double periodicity_tolerance = 1e-10;  ///< relative change of Z(0) per period
};

struct AdjointSolution {
  std::vector<double> times;
  std::vector<Vec2> Z;
  double normalization_residual = 0.0;  ///< max |Z·F - target| / target
  double periodicity_error = 0.0;       ///< ‖Z(0) - Z(T)‖
  int periods = 0;
};

/// Integrates dZ/dt = -∇F(U(t))ᵀ Z backward over repeated periods until Z is
/// periodic, then scales Z·F to the chosen phase velocity.
AdjointSolution adjoint_prc(const LimitCycle& cycle,
                            const OscillatorModel& model,
                            const AdjointOptions& options = {});

using Perturbation = std::function<Vec2(const Vec2&, double)>;

/// (1/T) ∫₀ᵀ Z(t)·G(U(t), t) dt by the trapezoid rule on the cycle grid.
double malkin_average(const LimitCycle& cycle, const AdjointSolution& adjoint,
                      const Perturbation& G);

}  // namespace stochphase
