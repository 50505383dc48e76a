// One PASS/FAIL line per primary acceptance criterion.

#include "stochphase/config.hpp"
#include "stochphase/deterministic.hpp"
#include "stochphase/doob.hpp"
#include "stochphase/empirical.hpp"
#include "stochphase/mrt.hpp"
#include "stochphase/operators.hpp"
#include "stochphase/simulate.hpp"
#include "stochphase/spectral.hpp"
#include "stochphase/verify.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstring>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>

using namespace stochphase;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail, double seconds) {
  if (!pass) ++failures;
  std::cout << fmt::format("{} {}: {} [{:.1f} s]", pass ? "PASS" : "FAIL", name, detail, seconds)
            << std::endl;
}

void criterion(const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    std::tie(pass, detail) = fn();
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report(name, pass, detail,
         std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

RunConfig config(const char* name) {
  return load_run_config(std::string(STOCHPHASE_CONFIG_DIR) + "/" + name);
}

struct GridPipeline {
  std::shared_ptr<const AnnulusGrid> grid;
  SparseOperator backward;
  ScalarField density;
  MeanPeriod period;
  SpectralSolution spectral;
};

GridPipeline pipeline(const OscillatorModel& model, const GridSpec& spec) {
  GridPipeline p;
  p.grid = AnnulusGrid::make(spec);
  p.backward = assemble_backward(model, p.grid);
  p.density = stationary_density(forward_from_backward(p.backward));
  p.period = mean_period(probability_current(model, p.grid, p.density));
  p.spectral = solve_spectral(model, p.backward, p.period.Tbar,
                              mask_from_density(p.density, 1e-6));
  return p;
}

SimConfig reflected(SimConfig sim, const GridSpec& g) {
  sim.reflection = AnnulusReflection{g.center, g.r_in, g.r_out};
  return sim;
}

double worst_pairwise_z(const std::vector<ReturnTimeStats>& s) {
  double worst = 0.0;
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = a + 1; b < s.size(); ++b)
      worst = std::max(worst, std::abs(s[a].mean - s[b].mean) /
                                  std::hypot(s[a].std_error, s[b].std_error));
  return worst;
}

std::string means(const std::vector<ReturnTimeStats>& s) {
  std::string out;
  for (const auto& r : s) out += fmt::format("{}{:.4f}", out.empty() ? "" : " ", r.mean);
  return out;
}

}  // namespace

int main() {
  const std::vector<double> radii = {0.3, 0.6, 1.0, 1.5, 2.2};

  criterion("linear_focus_eigenvalue", [] {
    const RunConfig c = config("focus_eig.json");
    const auto model = make_model(c.model);
    const auto& A = std::get<LinearFocusParams>(c.model).A;
    const Eigen::Vector2cd ev = A.eigenvalues();
    const std::complex<double> exact = ev[0].imag() > 0 ? ev[0] : ev[1];
    GridSpec g = c.grid;
    g.n_alpha = 128;
    g.n_beta = 64;
    const auto coarse = pipeline(model, g).spectral.lambda1;
    g.n_alpha = 256;
    g.n_beta = 128;
    const auto fine = pipeline(model, g).spectral.lambda1;
    const double e1 = std::abs(coarse - exact) / std::abs(exact);
    const double e2 = std::abs(fine - exact) / std::abs(exact);
    const bool pass = e1 < 0.02 && std::abs(e1 / e2 - 4.0) <= 0.5;
    return std::pair{pass, fmt::format("lambda1 {:.5f}{:+.5f}i vs {:.0f}{:+.0f}i, rel err {:.2e} "
                                       "(128x64) {:.2e} (256x128), ratio {:.2f}",
                                       coarse.real(), coarse.imag(), exact.real(),
                                       exact.imag(), e1, e2, e1 / e2)};
  });

  criterion("identity_suite_grid", [] {
    std::string detail;
    bool pass = true;
    for (const char* name : {"focus.json", "sl.json"}) {
      const RunConfig c = config(name);
      VerifyOptions o;
      o.run_monte_carlo = false;
      const auto r = run_identity_suite(make_model(c.model), c.grid, c.sim, o);
      for (const auto& chk : r.checks) {
        pass = pass && chk.pass;
        detail += fmt::format("{}{} {} {:.2e}/{:.2e}", detail.empty() ? "" : "; ", name,
                              chk.name, chk.value, chk.tolerance);
      }
    }
    return std::pair{pass, detail};
  });

  // Canonical focus: one full verify run feeds three criteria.
  const RunConfig focus = config("focus.json");
  const auto focus_model = make_model(focus.model);
  VerificationReport verify;
  std::string verify_error;
  {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      VerifyOptions o = verify_options_from_json(focus.extra.value("verify", nlohmann::json::object()));
      o.isochron_radii = radii;
      o.return_repeats = 10000;
      verify = run_identity_suite(focus_model, focus.grid, focus.sim, o);
    } catch (const std::exception& e) {
      verify_error = e.what();
    }
    std::cout << fmt::format("(canonical focus verify run: {:.1f} s)",
                             std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count())
              << std::endl;
  }
  auto verify_check = [&](const char* name) -> const CheckResult& {
    if (!verify_error.empty()) throw std::runtime_error(verify_error);
    return verify.check(name);
  };

  criterion("mrt_return_time_homogeneity", [&] {
    const auto& iso = verify_check("mrt_return_time_homogeneity");
    const auto p = pipeline(focus_model, focus.grid);
    SimConfig rc = reflected(focus.sim, focus.grid);
    rc.n_samples = 10000;
    rc.n_steps = std::max<std::int64_t>(
        rc.n_steps, static_cast<std::int64_t>(std::ceil(50.0 * p.period.Tbar / rc.dt)));
    std::vector<Vec2> starts;
    for (double r : radii) starts.emplace_back(r, 0.0);
    const auto ray = first_return_times(focus_model, rc, polar_angle_section(Vec2::Zero()), starts);
    const double z_ray = worst_pairwise_z(ray);
    const bool pass = iso.pass && z_ray > iso.tolerance;
    return std::pair{pass, fmt::format("isochron worst z {:.2f} (<= {}), {}; ray worst z {:.2f} "
                                       "(must exceed {}), means [{}]",
                                       iso.value, iso.tolerance, iso.detail, z_ray,
                                       iso.tolerance, means(ray))};
  });

  criterion("mean_period_consistency", [&] {
    const auto p = pipeline(focus_model, focus.grid);
    // Fine record spacing keeps the angle unwrapping exact near the origin.
    double w_sum = 0.0, w_var = 0.0;
    const int batches = 4;
    for (int b = 0; b < batches; ++b) {
      SimConfig s = focus.sim;
      s.seed = focus.sim.seed + 1000 + b;
      s.n_samples = 250;
      s.n_steps = 40000;
      s.record_every = 2;
      const auto pe = empirical_mean_period(euler_maruyama(focus_model, s), Vec2::Zero(), 0.2);
      w_sum += pe.mean_angular_velocity;
      w_var += pe.angular_velocity_std_error * pe.angular_velocity_std_error;
    }
    const double w = w_sum / batches, w_se = std::sqrt(w_var) / batches;
    const double T = kTwoPi / w, T_se = kTwoPi * w_se / (w * w);
    const double z = std::abs(T - p.period.Tbar) / T_se;
    const bool pass = z <= 3.0 && p.period.relative_spread < 0.01;
    return std::pair{pass, fmt::format("Tbar {:.5f} vs empirical {:.5f} +- {:.5f} ({:.2f} SE); "
                                       "section flux spread {:.2e}",
                                       p.period.Tbar, T, T_se, z, p.period.relative_spread)};
  });

  criterion("autocorrelation_rates", [&] {
    const auto& c = verify_check("autocorrelation_rates");
    return std::pair{c.pass && c.tolerance <= 0.05,
                     fmt::format("max rel err {:.4f} (<= {}), {}", c.value, c.tolerance, c.detail)};
  });

  criterion("doob_transform", [&] {
    const auto p = pipeline(focus_model, focus.grid);
    const auto& sp = p.spectral;
    // (a) h = 1.
    const ScalarField one(p.grid, Eigen::VectorXd::Ones(p.grid->size()));
    bool a = true;
    for (const auto& op : {doob_generator(p.backward, one, 0.0),
                           doob_generator(p.backward, one, ConservativePotential{})}) {
      a = a && op.matrix.nonZeros() == p.backward.matrix.nonZeros() &&
          std::memcmp(op.matrix.valuePtr(), p.backward.matrix.valuePtr(),
                      sizeof(double) * op.matrix.nonZeros()) == 0 &&
          std::memcmp(op.matrix.innerIndexPtr(), p.backward.matrix.innerIndexPtr(),
                      sizeof(int) * op.matrix.nonZeros()) == 0;
    }
    const auto unit = doob_transformed_model(focus_model, one);
    for (int k = 0; k < p.grid->size(); k += 7) {
      const Vec2 x = p.grid->position(k);
      const Vec2 d1 = unit.model().drift(x), d0 = focus_model.drift(x);
      a = a && std::memcmp(d1.data(), d0.data(), 2 * sizeof(double)) == 0;
    }
    // (b) conservative transform with h = u.
    const auto cons = doob_generator(p.backward, sp.u, ConservativePotential{});
    double worst_row = 0.0;
    for (int r = 0; r < cons.matrix.outerSize(); ++r) {
      double off = 0.0, diag = 0.0;
      for (SparseOperator::Matrix::InnerIterator it(cons.matrix, r); it; ++it)
        (it.col() == r ? diag : off) += it.value();
      worst_row = std::max(worst_row, std::abs(off + diag));
    }
    const bool b = worst_row == 0.0;
    // (c) conditioned and unconditioned phase velocities.
    const auto& cond = verify_check("doob_conditioned_velocity");
    SimConfig sim = reflected(focus.sim, focus.grid);
    const auto plain = mean_phase_velocity(focus_model, sp.psi, sim, 0.2);
    const double omega_avg = stationary_average(sp.omega.values, p.density);
    const double z_plain = std::abs(plain.mean - (sp.omega1 - omega_avg)) / plain.std_error;
    const bool c = cond.pass && z_plain <= 3.0;
    return std::pair{a && b && c,
                     fmt::format("(a) bit-identical {}; (b) max |row sum| {:.1e}; (c) {} ({:.2f} SE); "
                                 "unconditioned {:.5f} +- {:.5f} vs omega1 - <Omega> = {:.5f} - "
                                 "({:.5f}) ({:.2f} SE)",
                                 a, worst_row, cond.detail, cond.value, plain.mean,
                                 plain.std_error, sp.omega1, omega_avg, z_plain)};
  });

  criterion("deterministic_bridge", [] {
    const auto sl = make_stuart_landau({1.0, 1.0, 0.0});
    const auto cycle = find_limit_cycle(sl, Vec2(1.0, 0.0));
    const auto adj = adjoint_prc(cycle, sl);
    double prc_err = 0.0;
    for (std::size_t k = 0; k < adj.times.size(); ++k) {
      const double t = adj.times[k];
      prc_err = std::max(prc_err, (adj.Z[k] - Vec2(-std::sin(t), std::cos(t))).cwiseAbs().maxCoeff());
    }
    const double malkin = malkin_average(
        cycle, adj, [](const Vec2& x, double) -> Vec2 { return Vec2(-x.y(), x.x()) / x.norm(); });

    GridSpec g;
    g.n_alpha = 128;
    g.n_beta = 64;
    g.r_in = 0.7;
    g.r_out = 1.3;
    const auto noisy = make_stuart_landau({1.0, 1.0, 0.05});
    const auto p = pipeline(noisy, g);
    const double eps = 1e-3;
    double grad_err = 0.0;
    for (std::size_t k = 0; k + 1 < cycle.states.size(); k += 20) {
      const Vec2 x = cycle.states[k];
      Vec2 grad;
      for (int d = 0; d < 2; ++d) {
        Vec2 e = Vec2::Zero();
        e[d] = eps;
        grad[d] = wrap_pi(p.spectral.psi.interpolate(x + e) - p.spectral.psi.interpolate(x - e)) /
                  (2.0 * eps);
      }
      grad_err = std::max(grad_err, (grad - adj.Z[k]).norm() / adj.Z[k].norm());
    }
    const bool pass = prc_err < 1e-3 && std::abs(malkin - 1.0) < 1e-6 && grad_err < 0.1;
    return std::pair{pass, fmt::format("PRC sup err {:.2e}; Malkin {:.10f}; psi-gradient vs PRC "
                                       "max rel err {:.3f} (sigma 0.05)",
                                       prc_err, malkin, grad_err)};
  });

  criterion("figure1_protocol", [] {
    std::string detail;
    bool pass = true;
    for (const char* name : {"fig1_a4.json", "fig1_a1.json"}) {
      const RunConfig c = config(name);
      const double a = std::get<StuartLandauParams>(c.model).a;
      const auto model = make_model(c.model);
      const auto ens = euler_maruyama(model, c.sim);
      const double dr = 0.02;
      std::vector<long> hist(static_cast<std::size_t>(4.0 / dr) + 1, 0);
      for (int s = 0; s < ens.n_samples; ++s)
        for (int k = 0; k < ens.n_records; ++k) {
          const auto bin = static_cast<std::size_t>(ens.state(s, k).norm() / dr);
          if (bin < hist.size()) ++hist[bin];
        }
      const auto peak_bin = std::max_element(hist.begin(), hist.end()) - hist.begin();
      const double peak = (peak_bin + 0.5) * dr;

      BinGrid bins;
      const double half = std::sqrt(a) + 1.0;
      bins.lower = Vec2(-half, -half);
      bins.upper = Vec2(half, half);
      bins.nx = bins.ny = 40;
      const auto cur = binned_current(ens, bins);
      int near = 0, positive = 0;
      for (const auto& cell : cur.cells) {
        if (cell.masked || std::abs(cell.center.norm() - peak) > 0.25) continue;
        ++near;
        const Vec2 x = cell.center;
        positive += (x.x() * cell.current.y() - x.y() * cell.current.x()) > 0.0;
      }
      const bool ok = std::abs(peak - std::sqrt(a)) <= 0.2 && near >= 8 && positive == near;
      pass = pass && ok;
      detail += fmt::format("{}a={}: {} samples, radial peak {:.3f} vs sqrt(a) {:.3f}, "
                            "positive angular current in {}/{} bins near the peak",
                            detail.empty() ? "" : "; ", a, ens.n_samples, peak, std::sqrt(a),
                            positive, near);
    }
    return std::pair{pass, detail};
  });

  std::cout << (failures == 0 ? "ALL PRIMARY CRITERIA PASS" : fmt::format("{} CRITERIA FAILED", failures))
            << std::endl;
  return failures == 0 ? 0 : 1;
}
