#pragma once

#include "stochphase/grid.hpp"
#include "stochphase/models.hpp"
#include "stochphase/simulate.hpp"
#include "stochphase/spectral.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace stochphase {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  nlohmann::json manifest = nlohmann::json::object();

  bool all_pass() const;
  const CheckResult& check(const std::string& name) const;
  nlohmann::json to_json() const;
};

struct VerifyOptions {
  double mask_threshold = 1e-6;
  /// Grid identities pass below this multiple of the truncation estimate.
  double truncation_factor = 10.0;
  /// Monte Carlo checks pass within this many standard errors.
  double mc_sigmas = 3.0;
  double autocorrelation_rel_tol = 0.05;
  int autocorrelation_max_lag = 0;  ///< records; 0 chooses from μ₁
  int return_repeats = 10000;
  std::vector<double> isochron_radii;  ///< empty: 5 radii in the bulk
  double isochron_level = 0.0;
  EigenOptions eigen;
  /// Negative control: added to u before Ω is formed.
  double u_perturbation = 0.0;
  bool run_monte_carlo = true;
};

/// Names of the six checks, in report order.
inline const std::vector<std::string>& identity_check_names() {
  static const std::vector<std::string> names = {
      "mrt_generator_identity",      "spectral_generator_identity",
      "phase_relation_identity",     "autocorrelation_rates",
      "doob_conditioned_velocity",   "mrt_return_time_homogeneity"};
  return names;
}

/// Runs every identity check for one model. Grid stages run on `grid`; Monte
/// Carlo stages use `sim` (reflected at the grid annulus). Sub-module failures
/// are rethrown as StageError.
VerificationReport run_identity_suite(const OscillatorModel& model,
                                      const GridSpec& grid,
                                      const SimConfig& sim,
                                      const VerifyOptions& options = {});

/// Interior sup-norms of the three grid identities, with their truncation
/// estimates, for convergence studies without Monte Carlo.
struct IdentityResiduals {
  double mrt = 0.0, mrt_estimate = 0.0;
  double spectral = 0.0, spectral_estimate = 0.0;
  double relation = 0.0, relation_estimate = 0.0;
};

IdentityResiduals grid_identity_residuals(const OscillatorModel& model,
                                          const GridSpec& grid,
                                          const VerifyOptions& options = {});

}  // namespace stochphase
