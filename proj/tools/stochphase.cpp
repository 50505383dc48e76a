#include "stochphase/config.hpp"
#include "stochphase/deterministic.hpp"
#include "stochphase/doob.hpp"
#include "stochphase/empirical.hpp"
#include "stochphase/errors.hpp"
#include "stochphase/io.hpp"
#include "stochphase/mrt.hpp"
#include "stochphase/operators.hpp"
#include "stochphase/simulate.hpp"
#include "stochphase/spectral.hpp"
#include "stochphase/verify.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stochphase;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct GlobalFlags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> grid_na, grid_nb, threads;
  std::optional<double> rin, rout;
};

struct Context {
  std::string command;
  RunConfig cfg;
  OscillatorModel model;
  fs::path out;
  json manifest;

  Context(std::string cmd, RunConfig c, fs::path dir)
      : command(std::move(cmd)),
        cfg(std::move(c)),
        model(make_model(cfg.model)),
        out(std::move(dir)) {}

  std::string path(const std::string& file) const { return (out / file).string(); }
};

RunConfig resolve_config(const GlobalFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ParameterError("config: cannot open " + f.config);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ParameterError(fmt::format("config: {} is not valid JSON: {}", f.config, e.what()));
    }
    // A manifest from an earlier run carries its config.
    if (j.is_object() && j.contains("config") && j.contains("command")) j = j.at("config");
    cfg = run_config_from_json(j);
  } else {
    cfg.grid = default_grid_for(cfg.model);
  }
  if (f.seed) cfg.sim.seed = *f.seed;
  if (f.grid_na) cfg.grid.n_alpha = *f.grid_na;
  if (f.grid_nb) cfg.grid.n_beta = *f.grid_nb;
  if (f.rin) cfg.grid.r_in = *f.rin;
  if (f.rout) cfg.grid.r_out = *f.rout;
  if (f.threads) cfg.sim.threads = *f.threads;
  if (cfg.grid.n_alpha < 8 || cfg.grid.n_beta < 5)
    throw ParameterError("grid: need n_alpha >= 8 and n_beta >= 5");
  if (!(cfg.grid.r_in > 0.0 && cfg.grid.r_out > cfg.grid.r_in))
    throw ParameterError("grid: need 0 < r_in < r_out");
  cfg.sim.validate();
  return cfg;
}

std::string timestamp() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}",
                     fmt::gmtime(std::chrono::system_clock::to_time_t(
                         std::chrono::system_clock::now())));
}

void write_manifest(const Context& ctx) {
  json m = ctx.manifest;
  m["command"] = ctx.command;
  m["config"] = run_config_to_json(ctx.cfg);
  m["version"] = "0.1.0";
  m["timestamp"] = timestamp();
  m["rerun"] = fmt::format("stochphase {} --config manifest.json --out <dir>", ctx.command);
  std::ofstream(ctx.path("manifest.json")) << m.dump(2) << "\n";
}

struct Stationary {
  std::shared_ptr<const AnnulusGrid> grid;
  SparseOperator backward;
  ScalarField density;
  CurrentField current;
  MeanPeriod period;
};

Stationary run_stationary(Context& ctx) {
  Stationary s;
  s.grid = AnnulusGrid::make(ctx.cfg.grid);
  AssemblyReport rep;
  s.backward = assemble_backward(ctx.model, s.grid, &rep);
  StationaryDiagnostics diag;
  s.density = stationary_density(forward_from_backward(s.backward), &diag);
  s.current = probability_current(ctx.model, s.grid, s.density);
  s.period = mean_period(s.current);
  ctx.manifest["Tbar"] = s.period.Tbar;
  ctx.manifest["mean_flux"] = s.period.mean_flux;
  ctx.manifest["flux_relative_spread"] = s.period.relative_spread;
  ctx.manifest["stationary_residual"] = diag.residual;
  ctx.manifest["max_peclet"] = rep.max_peclet;
  return s;
}

SpectralSolution run_spectral(Context& ctx, const Stationary& s) {
  EigenOptions eo;
  eo.krylov_dim = ctx.cfg.solver.krylov_dim;
  eo.omega_guess = ctx.cfg.solver.omega_guess.value_or(kTwoPi / s.period.Tbar);
  eo.shift = std::complex<double>(0.0, eo.omega_guess);
  const auto mask = mask_from_density(s.density, ctx.cfg.solver.mask_threshold);
  SpectralSolution sp = solve_spectral(ctx.model, s.backward, s.period.Tbar, mask, eo);
  ctx.manifest["lambda1_re"] = sp.lambda1.real();
  ctx.manifest["lambda1_im"] = sp.lambda1.imag();
  ctx.manifest["arg_lambda1"] = sp.arg_lambda1;
  ctx.manifest["delta_omega"] = sp.delta_omega;
  ctx.manifest["winding"] = sp.winding;
  ctx.manifest["eigen_residual"] = sp.eigen_residual;
  return sp;
}

void write_stationary(const Context& ctx, const Stationary& s) {
  write_field_csv(ctx.path("density.csv"), s.density);
  ComplexField j(s.grid, Eigen::VectorXcd(s.grid->size()), "current", "jx+i*jy");
  for (int k = 0; k < s.grid->size(); ++k) j.values[k] = {s.current.jx[k], s.current.jy[k]};
  write_field_csv(ctx.path("current.csv"), j);
}

MrtSolution write_mrt(Context& ctx, const Stationary& s) {
  MrtOptions mo;
  mo.compatibility_tolerance = ctx.cfg.solver.mrt_compatibility_tolerance;
  MrtSolution mrt = solve_mrt(s.backward, s.period.Tbar, mo);
  write_field_csv(ctx.path("T.csv"),
                  ScalarField(s.grid, mrt.T.node_values(), "T", "time"));
  write_field_csv(ctx.path("theta.csv"), mrt.theta_wrapped);
  std::vector<Polyline> lines;
  for (int k = 0; k < 8; ++k) {
    auto part = isochron_extract(mrt.theta, kTwoPi * k / 8.0);
    lines.insert(lines.end(), part.begin(), part.end());
  }
  write_isochrons_csv(ctx.path("isochrons.csv"), lines);
  ctx.manifest["fredholm_residual"] = mrt.fredholm_residual;
  ctx.manifest["reference_time"] = mrt.reference_time;
  return mrt;
}

void write_spectral(const Context& ctx, const Stationary& s, const SpectralSolution& sp) {
  write_field_csv(ctx.path("Q.csv"), sp.Q);
  write_field_csv(ctx.path("u.csv"), sp.u);
  write_field_csv(ctx.path("psi.csv"),
                  ScalarField(s.grid, sp.psi.wrapped_values(), "psi", "rad"));
  write_field_csv(ctx.path("omega.csv"), sp.omega);
  write_field_csv(ctx.path("generator_psi.csv"), sp.generator_psi);
}

BinGrid bins_for(const GridSpec& g) {
  BinGrid b;
  b.lower = g.center - Vec2::Constant(g.r_out);
  b.upper = g.center + Vec2::Constant(g.r_out);
  b.nx = b.ny = 24;
  return b;
}

void write_empirical(Context& ctx, const TrajectoryEnsemble& ens,
                     const std::shared_ptr<const AnnulusGrid>& grid) {
  write_field_csv(ctx.path("kde_density.csv"), kde_density(ens, grid));
  write_quiver_csv(ctx.path("quiver.csv"), binned_current(ens, bins_for(ctx.cfg.grid)));
  const auto flux = ray_flux(ens, ctx.cfg.grid.center);
  ctx.manifest["ray_flux"] = flux.flux;
  ctx.manifest["ray_flux_std_error"] = flux.std_error;
  ctx.manifest["mass_fraction_inside"] = mass_fraction_inside(ens, *grid);
  try {
    const auto pe = empirical_mean_period(ens, ctx.cfg.grid.center, 0.2);
    ctx.manifest["empirical_mean_period"] = pe.mean_period;
    ctx.manifest["empirical_mean_period_std_error"] = pe.std_error;
  } catch (const DomainError& e) {
    std::cerr << "warning: " << e.what() << "\n";
  }
}

int cmd_simulate(Context& ctx) {
  const auto ens = euler_maruyama(ctx.model, ctx.cfg.sim);
  write_trajectory_csv(ctx.path("trajectories.csv"), ens);
  ctx.manifest["n_samples"] = ens.n_samples;
  ctx.manifest["n_records"] = ens.n_records;
  return 0;
}

int cmd_empirical(Context& ctx) {
  const auto ens = euler_maruyama(ctx.model, ctx.cfg.sim);
  const Stationary s = run_stationary(ctx);
  write_empirical(ctx, ens, s.grid);
  const SpectralSolution sp = run_spectral(ctx, s);
  const int kept = ens.n_records - static_cast<int>(std::floor(0.2 * ens.n_records));
  int max_lag = static_cast<int>(std::ceil(2.5 / std::abs(sp.mu1) / ens.record_spacing()));
  max_lag = std::min(max_lag, kept / 2);
  const int step = std::max(1, std::min(max_lag / 200,
      static_cast<int>(0.5 / (sp.omega1 * ens.record_spacing()))));
  std::vector<int> lags;
  for (int k = 0; k <= max_lag; k += step) lags.push_back(k);
  const auto c = autocorrelation(
      ens, [&](const Vec2& x) { return s.grid->interpolate(sp.Q.values, x); }, lags);
  write_autocorrelation_csv(ctx.path("autocorrelation.csv"), c);
  const auto fit = fit_decay_rotation(c);
  ctx.manifest["autocorrelation_fit"] = {{"decay_rate", fit.decay_rate},
                                         {"rotation_rate", fit.rotation_rate},
                                         {"points", fit.points}};
  return 0;
}

int cmd_stationary(Context& ctx) {
  write_stationary(ctx, run_stationary(ctx));
  return 0;
}

int cmd_mrt(Context& ctx) {
  const Stationary s = run_stationary(ctx);
  write_mrt(ctx, s);
  return 0;
}

int cmd_spectral(Context& ctx) {
  const Stationary s = run_stationary(ctx);
  write_spectral(ctx, s, run_spectral(ctx, s));
  return 0;
}

int cmd_doob(Context& ctx) {
  const Stationary s = run_stationary(ctx);
  const SpectralSolution sp = run_spectral(ctx, s);
  const auto dm = doob_transformed_model(ctx.model, sp.u);
  ComplexField corr(s.grid, Eigen::VectorXcd(s.grid->size()), "doob_correction", "2D grad ln u");
  for (int k = 0; k < s.grid->size(); ++k)
    corr.values[k] = {dm.correction_x()[k], dm.correction_y()[k]};
  write_field_csv(ctx.path("doob_correction.csv"), corr);

  SimConfig sim = ctx.cfg.sim;
  if (!sim.reflection)
    sim.reflection = AnnulusReflection{ctx.cfg.grid.center, ctx.cfg.grid.r_in, ctx.cfg.grid.r_out};
  if (std::holds_alternative<Vec2>(sim.initial) && !s.grid->contains(std::get<Vec2>(sim.initial)))
    sim.initial = s.grid->position(s.grid->anchor_node());
  const auto cond = conditioned_phase_velocity(dm, sp, sim);
  const auto plain = mean_phase_velocity(ctx.model, sp.psi, sim, 0.2);
  ctx.manifest["doob"] = {{"h", "u"}, {"f", "conservative"}};
  ctx.manifest["conditioned_phase_velocity"] = {{"mean", cond.mean},
                                                {"std_error", cond.std_error}};
  ctx.manifest["unconditioned_phase_velocity"] = {{"mean", plain.mean},
                                                  {"std_error", plain.std_error}};
  ctx.manifest["stationary_average_omega"] = stationary_average(sp.omega.values, s.density);
  ctx.manifest["omega1"] = sp.omega1;
  return 0;
}

int cmd_prc(Context& ctx) {
  Vec2 guess(1.0, 0.0);
  if (const auto* p = std::get_if<StuartLandauParams>(&ctx.cfg.model))
    guess = Vec2(std::sqrt(p->a), 0.0);
  const auto det = ctx.model.deterministic();
  const auto cycle = find_limit_cycle(det, guess);
  const auto adj = adjoint_prc(cycle, det);
  write_prc_csv(ctx.path("prc.csv"), cycle, adj);
  ctx.manifest["period"] = cycle.period;
  ctx.manifest["closure_error"] = cycle.closure_error;
  ctx.manifest["normalization"] = "angular";
  ctx.manifest["normalization_residual"] = adj.normalization_residual;
  ctx.manifest["periodicity_error"] = adj.periodicity_error;
  return 0;
}

int cmd_verify(Context& ctx) {
  VerifyOptions opt;
  opt.mask_threshold = ctx.cfg.solver.mask_threshold;
  opt.eigen.krylov_dim = ctx.cfg.solver.krylov_dim;
  if (ctx.cfg.extra.contains("verify"))
    opt = verify_options_from_json(ctx.cfg.extra.at("verify"), opt);
  const auto report = run_identity_suite(ctx.model, ctx.cfg.grid, ctx.cfg.sim, opt);
  const json j = report.to_json();
  std::ofstream(ctx.path("report.json")) << j.dump(2) << "\n";
  for (const auto& [k, v] : report.manifest.items()) ctx.manifest[k] = v;
  ctx.manifest["checks"] = j.at("checks");
  ctx.manifest["all_pass"] = report.all_pass();
  std::cout << j.dump(2) << "\n";
  return report.all_pass() ? 0 : 1;
}

int cmd_report(Context& ctx) {
  const Stationary s = run_stationary(ctx);
  write_stationary(ctx, s);
  write_mrt(ctx, s);
  const SpectralSolution sp = run_spectral(ctx, s);
  write_spectral(ctx, s, sp);
  const auto ens = euler_maruyama(ctx.model, ctx.cfg.sim);
  write_empirical(ctx, ens, s.grid);
  if (std::holds_alternative<StuartLandauParams>(ctx.cfg.model)) {
    try {
      const auto det = ctx.model.deterministic();
      const auto cycle =
          find_limit_cycle(det, Vec2(std::sqrt(std::get<StuartLandauParams>(ctx.cfg.model).a), 0.0));
      write_prc_csv(ctx.path("prc.csv"), cycle, adjoint_prc(cycle, det));
    } catch (const DomainError& e) {
      std::cerr << "warning: prc skipped: " << e.what() << "\n";
    }
  }
  ctx.manifest["files"] = {"density.csv", "current.csv", "T.csv", "theta.csv",
                           "isochrons.csv", "Q.csv", "u.csv", "psi.csv", "omega.csv",
                           "generator_psi.csv", "kde_density.csv", "quiver.csv"};
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase reduction tools for noisy planar oscillators", "stochphase"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--config", flags.config, "JSON run configuration or an earlier manifest");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--seed", flags.seed, "Random seed (overrides sim.seed)");
  app.add_option("--grid-na", flags.grid_na, "Grid nodes in alpha");
  app.add_option("--grid-nb", flags.grid_nb, "Grid nodes in beta");
  app.add_option("--rin", flags.rin, "Inner annulus radius");
  app.add_option("--rout", flags.rout, "Outer annulus radius");
  app.add_option("--threads", flags.threads, "Worker threads (0: all cores)");

  using Handler = int (*)(Context&);
  const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
      {"simulate", "Euler-Maruyama ensemble to trajectories.csv", cmd_simulate},
      {"empirical", "KDE density, binned current, autocorrelation", cmd_empirical},
      {"stationary", "Stationary density, current and mean period", cmd_stationary},
      {"mrt", "Mean return time, MRT phase and isochrons", cmd_mrt},
      {"spectral", "Leading eigenpair, u, psi, Omega, delta omega", cmd_spectral},
      {"doob", "Doob correction field and conditioned run", cmd_doob},
      {"prc", "Limit cycle and adjoint PRC", cmd_prc},
      {"verify", "Identity suite report", cmd_verify},
      {"report", "Field bundle for plotting", cmd_report},
  };
  for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  Handler handler = nullptr;
  for (const auto& [name, help, fn] : commands)
    if (sub->get_name() == name) handler = fn;

  try {
    Context ctx(sub->get_name(), resolve_config(flags), flags.out);
    fs::create_directories(ctx.out);
    const int code = handler(ctx);
    write_manifest(ctx);
    return code;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
