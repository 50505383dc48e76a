#include "stochphase/verify.hpp"

#include "stochphase/doob.hpp"
#include "stochphase/empirical.hpp"
#include "stochphase/errors.hpp"
#include "stochphase/mrt.hpp"
#include "stochphase/operators.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stochphase {

using nlohmann::json;

bool VerificationReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return !checks.empty();
}

const CheckResult& VerificationReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no check named " + name);
}

json VerificationReport::to_json() const {
  json arr = json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"value", c.value},
                   {"tolerance", c.tolerance},
                   {"pass", c.pass},
                   {"detail", c.detail}});
  }
  return {{"checks", arr}, {"manifest", manifest}, {"all_pass", all_pass()}};
}

namespace {

template <class Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const DomainError& e) {
    throw StageError(name, e.what());
  }
}

/// Everything the three grid identities need.
struct GridStages {
  std::shared_ptr<const AnnulusGrid> grid;
  SparseOperator backward;
  ScalarField density;
  MeanPeriod period;
  MrtSolution mrt;
  SpectralSolution spectral;
  std::vector<bool> nodes;  ///< interior (stride-2 stencil) and unmasked
  IdentityResiduals residuals;
};

double sup_over(const std::vector<bool>& nodes, const Eigen::VectorXd& v) {
  double m = 0.0;
  for (int k = 0; k < v.size(); ++k)
    if (nodes[k] && std::isfinite(v[k])) m = std::max(m, std::abs(v[k]));
  return m;
}

GridStages run_grid_stages(const OscillatorModel& model, const GridSpec& spec,
                           const VerifyOptions& opt) {
  GridStages s;
  s.grid = stage("grid", [&] { return AnnulusGrid::make(spec); });
  const AnnulusGrid& g = *s.grid;
  s.backward = stage("operators", [&] { return assemble_backward(model, s.grid); });
  s.density = stage("stationary", [&] {
    return stationary_density(forward_from_backward(s.backward));
  });
  s.period = stage("stationary", [&] {
    return mean_period(probability_current(model, s.grid, s.density));
  });
  const double Tbar = s.period.Tbar;
  const auto mask = mask_from_density(s.density, opt.mask_threshold);
  s.mrt = stage("mrt", [&] { return solve_mrt(s.backward, Tbar); });
  s.spectral = stage("spectral", [&] {
    return solve_spectral(model, s.backward, Tbar, mask, opt.eigen);
  });
  SpectralSolution& sp = s.spectral;

  // Ω from the (possibly corrupted) amplitude.
  ScalarField u = sp.u;
  u.values.array() += opt.u_perturbation;
  const Eigen::VectorXd omega1 = omega_values(u, sp.psi, model, 1);
  const Eigen::VectorXd omega2 = omega_values(u, sp.psi, model, 2);

  s.nodes.assign(g.size(), false);
  for (int k = 0; k < g.size(); ++k) s.nodes[k] = mask[k] && g.is_interior(k, 2);

  const double two_pi = 2.0 * std::numbers::pi;
  const Eigen::VectorXd ltheta = apply_lifted(s.backward, s.mrt.theta);
  const Eigen::VectorXd lpsi = apply_lifted(s.backward, sp.psi);
  const Eigen::VectorXd r1 = ltheta.array() - two_pi / Tbar;
  const Eigen::VectorXd r2 = (lpsi + omega1).array() - sp.omega1;
  const Eigen::VectorXd r3 = ltheta - (lpsi + omega1).array().matrix() -
                             Eigen::VectorXd::Constant(g.size(), sp.delta_omega);

  // Richardson-style estimates: the stride-2 stencil has four times the
  // leading truncation error of the stride-1 stencil.
  auto richardson = [&](const Eigen::VectorXd& a1, const Eigen::VectorXd& a2) {
    return sup_over(s.nodes, a1 - a2) / 3.0;
  };
  const double t_theta =
      richardson(apply_backward_stencil(model, g, s.mrt.theta, 1),
                 apply_backward_stencil(model, g, s.mrt.theta, 2));
  const Eigen::VectorXcd q1 = apply_backward_stencil(model, g, sp.Q.values, 1);
  const Eigen::VectorXcd q2 = apply_backward_stencil(model, g, sp.Q.values, 2);
  Eigen::VectorXd q_im(g.size());
  for (int k = 0; k < g.size(); ++k) q_im[k] = ((q1[k] - q2[k]) / sp.Q.values[k]).imag();
  const double t_q = sup_over(s.nodes, q_im) / 3.0;
  const double t_psi = richardson(apply_backward_stencil(model, g, sp.psi, 1),
                                  apply_backward_stencil(model, g, sp.psi, 2));
  const double t_omega = richardson(omega1, omega2);

  // Rounding floor so that exactly representable cases are not judged
  // against a zero estimate.
  const double floor = 1e-9 * std::max(1.0, std::abs(sp.lambda1));
  IdentityResiduals& r = s.residuals;
  r.mrt = sup_over(s.nodes, r1);
  r.mrt_estimate = std::max(t_theta, floor);
  r.spectral = sup_over(s.nodes, r2);
  r.spectral_estimate = std::max(t_q + t_psi + t_omega, floor);
  r.relation = sup_over(s.nodes, r3);
  r.relation_estimate = r.mrt_estimate + r.spectral_estimate;
  return s;
}

CheckResult grid_check(const char* name, double value, double estimate, double factor) {
  CheckResult c;
  c.name = name;
  c.value = value;
  c.tolerance = factor * estimate;
  c.pass = std::isfinite(value) && value <= c.tolerance;
  c.detail = fmt::format("interior sup-norm {:.3e}, truncation estimate {:.3e}",
                         value, estimate);
  return c;
}

/// Radii at which the radial marginal reaches the given cumulative fractions.
std::vector<double> bulk_radii(const ScalarField& density,
                               const std::vector<double>& fractions) {
  const AnnulusGrid& g = *density.grid;
  const auto marginal = radial_marginal(density);
  std::vector<double> cdf(g.n_beta(), 0.0);
  for (int j = 1; j < g.n_beta(); ++j)
    cdf[j] = cdf[j - 1] + 0.5 * (marginal[j] + marginal[j - 1]) *
                              (g.radius(j) - g.radius(j - 1));
  std::vector<double> out;
  for (double f : fractions) {
    const double target = f * cdf.back();
    int j = 1;
    while (j < g.n_beta() - 1 && cdf[j] < target) ++j;
    const double t = (target - cdf[j - 1]) / std::max(cdf[j] - cdf[j - 1], 1e-300);
    out.push_back(g.radius(j - 1) + t * (g.radius(j) - g.radius(j - 1)));
  }
  return out;
}

}  // namespace

IdentityResiduals grid_identity_residuals(const OscillatorModel& model,
                                          const GridSpec& grid,
                                          const VerifyOptions& options) {
  return run_grid_stages(model, grid, options).residuals;
}

VerificationReport run_identity_suite(const OscillatorModel& model,
                                      const GridSpec& grid_spec,
                                      const SimConfig& sim_in,
                                      const VerifyOptions& opt) {
  VerificationReport report;
  const GridStages s = run_grid_stages(model, grid_spec, opt);
  const SpectralSolution& sp = s.spectral;
  const auto& r = s.residuals;

  report.checks.push_back(grid_check("mrt_generator_identity", r.mrt, r.mrt_estimate,
                                     opt.truncation_factor));
  report.checks.push_back(grid_check("spectral_generator_identity", r.spectral,
                                     r.spectral_estimate, opt.truncation_factor));
  report.checks.push_back(grid_check("phase_relation_identity", r.relation,
                                     r.relation_estimate, opt.truncation_factor));
  if (report.checks[0].pass && report.checks[1].pass && !report.checks[2].pass)
    throw std::logic_error(
        "verify: phase relation failed although both generator identities passed");

  report.manifest = {{"model", model.name()},
                     {"params", model.params()},
                     {"grid", {{"n_alpha", grid_spec.n_alpha},
                               {"n_beta", grid_spec.n_beta},
                               {"r_in", grid_spec.r_in},
                               {"r_out", grid_spec.r_out}}},
                     {"lambda1_re", sp.lambda1.real()},
                     {"lambda1_im", sp.lambda1.imag()},
                     {"arg_lambda1", sp.arg_lambda1},
                     {"Tbar", sp.Tbar},
                     {"delta_omega", sp.delta_omega},
                     {"winding", sp.winding},
                     {"eigen_residual", sp.eigen_residual},
                     {"seed", sim_in.seed}};
  if (!opt.run_monte_carlo) return report;

  SimConfig sim = sim_in;
  if (!sim.reflection)
    sim.reflection = AnnulusReflection{grid_spec.center, grid_spec.r_in, grid_spec.r_out};
  if (std::holds_alternative<Vec2>(sim.initial) &&
      !s.grid->contains(std::get<Vec2>(sim.initial)))
    sim.initial = s.grid->position(s.grid->anchor_node());

  {  // (iv) autocorrelation rates
    const auto ens = stage("simulate", [&] { return euler_maruyama(model, sim); });
    const double burn = 0.2;
    const int kept = ens.n_records - static_cast<int>(std::floor(burn * ens.n_records));
    int max_lag = opt.autocorrelation_max_lag;
    if (max_lag <= 0)
      max_lag = static_cast<int>(std::ceil(2.5 / std::abs(sp.mu1) / ens.record_spacing()));
    max_lag = std::min(max_lag, kept / 2);
    // At most ~200 lags, spaced finely enough to unwrap the rotation.
    const int by_count = std::max(1, max_lag / 200);
    const int by_phase = std::max(
        1, static_cast<int>(0.5 / (std::abs(sp.omega1) * ens.record_spacing())));
    const int step = std::min(by_count, by_phase);
    std::vector<int> lags;
    for (int k = 0; k <= max_lag; k += step) lags.push_back(k);
    const auto fit = stage("autocorrelation", [&] {
      const auto c = autocorrelation(
          ens, [&](const Vec2& x) { return s.grid->interpolate(sp.Q.values, x); }, lags,
          burn);
      return fit_decay_rotation(c, 0.1);
    });
    const double e_mu = std::abs(fit.decay_rate - sp.mu1) / std::abs(sp.mu1);
    const double e_om = std::abs(fit.rotation_rate - sp.omega1) / std::abs(sp.omega1);
    CheckResult c;
    c.name = "autocorrelation_rates";
    c.value = std::max(e_mu, e_om);
    c.tolerance = opt.autocorrelation_rel_tol;
    c.pass = c.value <= c.tolerance;
    c.detail = fmt::format("fit ({:.5g}, {:.5g}) vs ({:.5g}, {:.5g}) over {} lags",
                           fit.decay_rate, fit.rotation_rate, sp.mu1, sp.omega1,
                           fit.points);
    report.checks.push_back(c);
  }

  {  // (v) Doob-conditioned phase velocity
    const auto v = stage("doob", [&] {
      const auto dm = doob_transformed_model(model, sp.u);
      return conditioned_phase_velocity(dm, sp, sim);
    });
    CheckResult c;
    c.name = "doob_conditioned_velocity";
    c.value = std::abs(v.mean - sp.omega1) / std::max(v.std_error, 1e-300);
    c.tolerance = opt.mc_sigmas;
    c.pass = c.value <= c.tolerance;
    c.detail = fmt::format("mean dpsi/dt {:.6g} +- {:.2g} vs omega1 {:.6g}", v.mean,
                           v.std_error, sp.omega1);
    report.checks.push_back(c);
  }

  {  // (vi) MRT return-time homogeneity on one isochron
    std::vector<double> radii = opt.isochron_radii;
    if (radii.empty()) radii = bulk_radii(s.density, {0.2, 0.35, 0.5, 0.65, 0.8});
    const auto stats = stage("mrt_return_times", [&] {
      std::vector<Vec2> starts;
      for (double rad : radii)
        starts.push_back(point_on_isochron(s.mrt.theta, opt.isochron_level, rad));
      SimConfig rc = sim;
      rc.n_samples = opt.return_repeats;
      rc.n_steps = std::max<std::int64_t>(
          rc.n_steps, static_cast<std::int64_t>(std::ceil(50.0 * sp.Tbar / rc.dt)));
      const LiftedField theta = s.mrt.theta;
      return first_return_times(
          model, rc, [theta](const Vec2& x) { return theta.interpolate(x); }, starts);
    });
    double worst = 0.0;
    std::string means;
    for (std::size_t a = 0; a < stats.size(); ++a) {
      means += fmt::format("{}{:.4f}+-{:.4f}", a ? ", " : "", stats[a].mean,
                           stats[a].std_error);
      for (std::size_t b = a + 1; b < stats.size(); ++b) {
        const double se = std::hypot(stats[a].std_error, stats[b].std_error);
        worst = std::max(worst, std::abs(stats[a].mean - stats[b].mean) / se);
      }
    }
    CheckResult c;
    c.name = "mrt_return_time_homogeneity";
    c.value = worst;
    c.tolerance = opt.mc_sigmas;
    c.pass = worst <= c.tolerance;
    c.detail = fmt::format("return times [{}], Tbar {:.4f}", means, sp.Tbar);
    report.checks.push_back(c);
  }
  return report;
}

}  // namespace stochphase
