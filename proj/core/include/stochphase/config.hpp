#pragma once

#include "stochphase/grid.hpp"
#include "stochphase/models.hpp"
#include "stochphase/simulate.hpp"
#include "stochphase/verify.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace stochphase {

/// Numerical settings shared by the grid solvers.
struct SolverConfig {
  int krylov_dim = 40;
  std::optional<double> omega_guess;  ///< default: 2π/T̄ from the grid
  double mask_threshold = 1e-6;       ///< relative to max P₀
  double mrt_compatibility_tolerance = 1e-6;
};

/// Whole-run configuration: {"model", "grid", "sim", "solver"} sections.
struct RunConfig {
  ModelConfig model = StuartLandauParams{};
  GridSpec grid;
  SimConfig sim;
  SolverConfig solver;
  nlohmann::json extra = nlohmann::json::object();  ///< e.g. "verify"
};

nlohmann::json model_to_json(const ModelConfig& config);
/// Accepts {"model": "stuart_landau"|"linear_focus", "params": {...}}.
ModelConfig model_from_json(const nlohmann::json& j);

nlohmann::json grid_to_json(const GridSpec& spec);
GridSpec grid_from_json(const nlohmann::json& j, GridSpec defaults = {});

nlohmann::json sim_to_json(const SimConfig& cfg);
SimConfig sim_from_json(const nlohmann::json& j, SimConfig defaults = {});

nlohmann::json solver_to_json(const SolverConfig& cfg);
SolverConfig solver_from_json(const nlohmann::json& j,
                              SolverConfig defaults = {});

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// Optional "verify" section: tolerances, repeats, isochron radii.
nlohmann::json verify_options_to_json(const VerifyOptions& opt);
VerifyOptions verify_options_from_json(const nlohmann::json& j,
                                       VerifyOptions defaults = {});

/// Default annulus for a model: covers the bulk of the stationary mass.
GridSpec default_grid_for(const ModelConfig& config);

}  // namespace stochphase
