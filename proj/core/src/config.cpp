#include "stochphase/config.hpp"

#include "stochphase/errors.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <cmath>
#include <fstream>

namespace stochphase {

using nlohmann::json;

namespace {

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ParameterError(fmt::format("config: bad value for '{}': {}", key, e.what()));
    }
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                    const char* section) {
  if (!j.is_object())
    throw ParameterError(fmt::format("config: section '{}' must be an object", section));
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known)
      throw ParameterError(fmt::format("config: unknown key '{}' in '{}'", k, section));
  }
}

Vec2 vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2)
    throw ParameterError(fmt::format("config: '{}' must be [x, y]", what));
  return {j[0].get<double>(), j[1].get<double>()};
}

json vec_to(const Vec2& v) { return json::array({v.x(), v.y()}); }

/// Σ with AΣ + ΣAᵀ + σ² I = 0.
Mat2 stationary_covariance(const Mat2& A, double sigma) {
  Eigen::Matrix3d M;
  M << 2 * A(0, 0), 2 * A(0, 1), 0.0,
       A(1, 0), A(0, 0) + A(1, 1), A(0, 1),
       0.0, 2 * A(1, 0), 2 * A(1, 1);
  const Eigen::Vector3d rhs(-sigma * sigma, 0.0, -sigma * sigma);
  const Eigen::Vector3d s = M.fullPivLu().solve(rhs);
  return (Mat2() << s[0], s[1], s[1], s[2]).finished();
}

}  // namespace

json model_to_json(const ModelConfig& config) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, StuartLandauParams>) {
          return {{"model", "stuart_landau"},
                  {"params", {{"a", p.a}, {"b", p.b}, {"sigma", p.sigma}}}};
        } else {
          return {{"model", "linear_focus"},
                  {"params",
                   {{"A", {p.A(0, 0), p.A(0, 1), p.A(1, 0), p.A(1, 1)}},
                    {"sigma", p.sigma}}}};
        }
      },
      config);
}

ModelConfig model_from_json(const json& j) {
  reject_unknown(j, {"model", "params"}, "model");
  if (!j.contains("model")) throw ParameterError("config: model name missing");
  const std::string name = j.at("model").get<std::string>();
  const json params = j.value("params", json::object());
  if (name == "stuart_landau") {
    reject_unknown(params, {"a", "b", "sigma"}, "model.params");
    StuartLandauParams p;
    read_if(params, "a", p.a);
    read_if(params, "b", p.b);
    read_if(params, "sigma", p.sigma);
    return p;
  }
  if (name == "linear_focus") {
    reject_unknown(params, {"A", "sigma"}, "model.params");
    LinearFocusParams p;
    if (params.contains("A")) {
      const auto a = params.at("A").get<std::vector<double>>();
      if (a.size() != 4)
        throw ParameterError("config: linear_focus A must list 4 entries (row-major)");
      p.A << a[0], a[1], a[2], a[3];
    }
    read_if(params, "sigma", p.sigma);
    return p;
  }
  throw ParameterError(fmt::format(
      "config: unknown model '{}' (expected stuart_landau or linear_focus)", name));
}

json grid_to_json(const GridSpec& s) {
  return {{"n_alpha", s.n_alpha}, {"n_beta", s.n_beta}, {"r_in", s.r_in},
          {"r_out", s.r_out},     {"center", vec_to(s.center)}};
}

GridSpec grid_from_json(const json& j, GridSpec s) {
  reject_unknown(j, {"n_alpha", "n_beta", "r_in", "r_out", "center"}, "grid");
  read_if(j, "n_alpha", s.n_alpha);
  read_if(j, "n_beta", s.n_beta);
  read_if(j, "r_in", s.r_in);
  read_if(j, "r_out", s.r_out);
  if (j.contains("center")) s.center = vec_from(j.at("center"), "grid.center");
  return s;
}

json sim_to_json(const SimConfig& c) {
  json j = {{"dt", c.dt},
            {"n_steps", c.n_steps},
            {"n_samples", c.n_samples},
            {"seed", c.seed},
            {"record_every", c.record_every},
            {"record_start", c.record_start},
            {"blowup_radius", c.blowup_radius},
            {"threads", c.threads}};
  if (const auto* p = std::get_if<Vec2>(&c.initial)) {
    j["initial"] = vec_to(*p);
  } else {
    const auto& s = std::get<UniformAnnulusSampler>(c.initial);
    j["initial"] = {{"r_min", s.r_min}, {"r_max", s.r_max}, {"center", vec_to(s.center)}};
  }
  if (c.reflection) {
    j["reflection"] = {{"r_in", c.reflection->r_in},
                       {"r_out", c.reflection->r_out},
                       {"center", vec_to(c.reflection->center)}};
  }
  return j;
}

SimConfig sim_from_json(const json& j, SimConfig c) {
  reject_unknown(j,
                 {"dt", "n_steps", "n_samples", "seed", "initial", "record_every",
                  "record_start", "blowup_radius", "reflection", "threads", "T"},
                 "sim");
  read_if(j, "dt", c.dt);
  read_if(j, "n_steps", c.n_steps);
  if (j.contains("T")) {
    const double T = j.at("T").get<double>();
    c.n_steps = static_cast<std::int64_t>(std::llround(T / c.dt));
  }
  read_if(j, "n_samples", c.n_samples);
  read_if(j, "seed", c.seed);
  read_if(j, "record_every", c.record_every);
  read_if(j, "record_start", c.record_start);
  read_if(j, "blowup_radius", c.blowup_radius);
  read_if(j, "threads", c.threads);
  if (j.contains("initial")) {
    const json& ic = j.at("initial");
    if (ic.is_array()) {
      c.initial = vec_from(ic, "sim.initial");
    } else {
      reject_unknown(ic, {"r_min", "r_max", "center"}, "sim.initial");
      UniformAnnulusSampler s;
      read_if(ic, "r_min", s.r_min);
      read_if(ic, "r_max", s.r_max);
      if (ic.contains("center")) s.center = vec_from(ic.at("center"), "sim.initial.center");
      c.initial = s;
    }
  }
  if (j.contains("reflection")) {
    const json& r = j.at("reflection");
    if (r.is_null()) {
      c.reflection.reset();
    } else {
      reject_unknown(r, {"r_in", "r_out", "center"}, "sim.reflection");
      AnnulusReflection a;
      read_if(r, "r_in", a.r_in);
      read_if(r, "r_out", a.r_out);
      if (r.contains("center")) a.center = vec_from(r.at("center"), "sim.reflection.center");
      c.reflection = a;
    }
  }
  return c;
}

json solver_to_json(const SolverConfig& c) {
  json j = {{"krylov_dim", c.krylov_dim},
            {"mask_threshold", c.mask_threshold},
            {"mrt_compatibility_tolerance", c.mrt_compatibility_tolerance}};
  j["omega_guess"] = c.omega_guess ? json(*c.omega_guess) : json(nullptr);
  return j;
}

SolverConfig solver_from_json(const json& j, SolverConfig c) {
  reject_unknown(j, {"krylov_dim", "omega_guess", "mask_threshold",
                     "mrt_compatibility_tolerance"},
                 "solver");
  read_if(j, "krylov_dim", c.krylov_dim);
  if (j.contains("omega_guess") && !j.at("omega_guess").is_null())
    c.omega_guess = j.at("omega_guess").get<double>();
  read_if(j, "mask_threshold", c.mask_threshold);
  read_if(j, "mrt_compatibility_tolerance", c.mrt_compatibility_tolerance);
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json j = {{"model", model_to_json(c.model)},
            {"grid", grid_to_json(c.grid)},
            {"sim", sim_to_json(c.sim)},
            {"solver", solver_to_json(c.solver)}};
  for (const auto& [k, v] : c.extra.items()) j[k] = v;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ParameterError("config: top level must be an object");
  RunConfig c;
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  c.grid = default_grid_for(c.model);
  if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"), c.grid);
  if (j.contains("sim")) c.sim = sim_from_json(j.at("sim"));
  if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
  for (const auto& [k, v] : j.items()) {
    if (k != "model" && k != "grid" && k != "sim" && k != "solver") c.extra[k] = v;
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParameterError(fmt::format("config: {} is not valid JSON: {}", path, e.what()));
  }
  return run_config_from_json(j);
}

json verify_options_to_json(const VerifyOptions& o) {
  return {{"mask_threshold", o.mask_threshold},
          {"truncation_factor", o.truncation_factor},
          {"mc_sigmas", o.mc_sigmas},
          {"autocorrelation_rel_tol", o.autocorrelation_rel_tol},
          {"autocorrelation_max_lag", o.autocorrelation_max_lag},
          {"return_repeats", o.return_repeats},
          {"isochron_radii", o.isochron_radii},
          {"isochron_level", o.isochron_level},
          {"u_perturbation", o.u_perturbation},
          {"run_monte_carlo", o.run_monte_carlo}};
}

VerifyOptions verify_options_from_json(const json& j, VerifyOptions o) {
  reject_unknown(j,
                 {"mask_threshold", "truncation_factor", "mc_sigmas",
                  "autocorrelation_rel_tol", "autocorrelation_max_lag",
                  "return_repeats", "isochron_radii", "isochron_level",
                  "u_perturbation", "run_monte_carlo"},
                 "verify");
  read_if(j, "mask_threshold", o.mask_threshold);
  read_if(j, "truncation_factor", o.truncation_factor);
  read_if(j, "mc_sigmas", o.mc_sigmas);
  read_if(j, "autocorrelation_rel_tol", o.autocorrelation_rel_tol);
  read_if(j, "autocorrelation_max_lag", o.autocorrelation_max_lag);
  read_if(j, "return_repeats", o.return_repeats);
  if (j.contains("isochron_radii"))
    o.isochron_radii = j.at("isochron_radii").get<std::vector<double>>();
  read_if(j, "isochron_level", o.isochron_level);
  read_if(j, "u_perturbation", o.u_perturbation);
  read_if(j, "run_monte_carlo", o.run_monte_carlo);
  if (o.return_repeats < 2) throw ParameterError("verify: return_repeats must be >= 2");
  if (o.truncation_factor <= 0.0 || o.mc_sigmas <= 0.0)
    throw ParameterError("verify: tolerances must be positive");
  return o;
}

GridSpec default_grid_for(const ModelConfig& config) {
  GridSpec g;
  if (const auto* p = std::get_if<StuartLandauParams>(&config)) {
    const double r0 = std::sqrt(std::max(p->a, 1e-12));
    const double width = std::max(p->sigma, 1e-3) / (2.0 * r0);
    g.r_in = std::max(0.1 * r0, r0 - 5.0 * width);
    g.r_out = r0 + 5.0 * width;
  } else {
    const auto& f = std::get<LinearFocusParams>(config);
    const Mat2 S = stationary_covariance(f.A, std::max(f.sigma, 1e-3));
    const double scale = std::sqrt(S.trace());
    g.r_in = 0.004 * scale;
    g.r_out = 5.0 * scale;
  }
  return g;
}

}  // namespace stochphase
