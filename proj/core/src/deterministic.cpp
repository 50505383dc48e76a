#include "stochphase/deterministic.hpp"

#include "stochphase/errors.hpp"

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include <array>
#include <cmath>
#include <numbers>

namespace stochphase {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::array<double, 2>;
using Stepper = odeint::runge_kutta_dopri5<State>;

Vec2 to_vec(const State& s) { return {s[0], s[1]}; }
State to_state(const Vec2& v) { return {v.x(), v.y()}; }

struct Rhs {
  const OscillatorModel* model;
  void operator()(const State& x, State& dx, double /*t*/) const {
    const Vec2 f = model->drift(to_vec(x));
    dx = {f.x(), f.y()};
  }
};

struct Return {
  Vec2 point;
  double time;
};

/// First crossing of the section {n·(x - p0) = 0} from below, after leaving it.
Return section_return(const OscillatorModel& model, const Vec2& start,
                      const Vec2& p0, const Vec2& normal,
                      const LimitCycleOptions& opt) {
  auto dense = odeint::make_dense_output(opt.ode_abs_tol, opt.ode_rel_tol, Stepper());
  const Rhs rhs{&model};
  dense.initialize(to_state(start), 0.0, 1e-3);
  auto side = [&](const State& s) { return normal.dot(to_vec(s) - p0); };
  double prev = side(to_state(start));
  bool left = false;
  while (dense.current_time() < opt.max_time) {
    dense.do_step(rhs);
    const State& cur = dense.current_state();
    const double s = side(cur);
    if (to_vec(cur).norm() > 1e8) throw DivergenceError("find_limit_cycle: orbit diverged");
    if (s < 0.0) left = true;
    if (left && prev < 0.0 && s >= 0.0) {
      double lo = dense.previous_time(), hi = dense.current_time();
      State x{};
      for (int it = 0; it < 100 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        dense.calc_state(mid, x);
        if (side(x) < 0.0) lo = mid;
        else hi = mid;
      }
      dense.calc_state(hi, x);
      return {to_vec(x), hi};
    }
    if (model.drift(to_vec(cur)).norm() < opt.collapse_radius)
      throw NonOscillatoryError(fmt::format(
          "find_limit_cycle: orbit settles at a fixed point near ({:.4g}, {:.4g})",
          cur[0], cur[1]));
    prev = s;
  }
  const State& cur = dense.current_state();
  if (model.drift(to_vec(cur)).norm() < 1e3 * opt.collapse_radius)
    throw NonOscillatoryError("find_limit_cycle: orbit spirals into a fixed point");
  throw DomainError(fmt::format("find_limit_cycle: no section return within t = {}",
                                opt.max_time));
}

}  // namespace

LimitCycle find_limit_cycle(const OscillatorModel& model, const Vec2& guess,
                            const LimitCycleOptions& opt) {
  const Vec2 f0 = model.drift(guess);
  if (f0.norm() < opt.collapse_radius)
    throw NonOscillatoryError("find_limit_cycle: guess is a fixed point");
  const Vec2 normal = f0.normalized();
  const Vec2 tangent(-normal.y(), normal.x());
  auto on_section = [&](double xi) { return Vec2(guess + xi * tangent); };

  // Poincaré map in the section coordinate; secant iteration on P(ξ) - ξ.
  double xi = 0.0;
  Return ret = section_return(model, on_section(xi), guess, normal, opt);
  double p = tangent.dot(ret.point - guess);
  double xi_prev = xi, g_prev = p - xi;
  xi = p;
  int it = 1;
  for (; it < opt.max_iterations; ++it) {
    ret = section_return(model, on_section(xi), guess, normal, opt);
    p = tangent.dot(ret.point - guess);
    const double g = p - xi;
    if (std::abs(g) < opt.tolerance) break;
    const double denom = g - g_prev;
    double next = std::abs(denom) > 1e-300 ? xi - g * (xi - xi_prev) / denom : p;
    if (!std::isfinite(next)) next = p;
    xi_prev = xi;
    g_prev = g;
    xi = next;
  }
  if (it >= opt.max_iterations)
    throw DomainError(fmt::format(
        "find_limit_cycle: shooting did not converge in {} iterations", opt.max_iterations));

  LimitCycle out;
  out.iterations = it + 1;
  out.period = ret.time;
  const Vec2 x0 = on_section(xi);
  const int n = opt.samples;
  out.times.resize(n + 1);
  for (int k = 0; k <= n; ++k) out.times[k] = out.period * k / n;
  out.states.reserve(n + 1);
  State s = to_state(x0);
  odeint::integrate_times(
      odeint::make_dense_output(opt.ode_abs_tol, opt.ode_rel_tol, Stepper()), Rhs{&model},
      s, out.times.begin(), out.times.end(), 1e-3,
      [&](const State& x, double) { out.states.push_back(to_vec(x)); });
  out.closure_error = (out.states.back() - out.states.front()).norm();
  return out;
}

AdjointSolution adjoint_prc(const LimitCycle& cycle, const OscillatorModel& model,
                            const AdjointOptions& options) {
  const int n = static_cast<int>(cycle.times.size()) - 1;
  if (n < 2) throw ParameterError("adjoint_prc: cycle needs at least two samples");
  const double T = cycle.period;
  const double h = T / n;

  // Cycle at half-step resolution for RK4.
  std::vector<double> fine_t(2 * n + 1);
  for (int k = 0; k <= 2 * n; ++k) fine_t[k] = 0.5 * h * k;
  std::vector<Mat2> jac;
  jac.reserve(2 * n + 1);
  State s = to_state(cycle.states.front());
  odeint::integrate_times(
      odeint::make_dense_output(1e-13, 1e-13, Stepper()), Rhs{&model}, s,
      fine_t.begin(), fine_t.end(), 1e-3,
      [&](const State& x, double) { jac.push_back(model.drift_jacobian(to_vec(x))); });

  const double target = options.normalization == PhaseNormalization::kAngular
                            ? 2.0 * std::numbers::pi / T
                            : 1.0;
  auto pairing = [&](int k, const Vec2& z) { return z.dot(model.drift(cycle.states[k])); };

  // dZ/ds = J(U(T - s))ᵀ Z with s = T - t.
  auto rhs = [&](int fine_index, const Vec2& z) -> Vec2 {
    return jac[fine_index].transpose() * z;
  };
  AdjointSolution out;
  out.times = cycle.times;
  out.Z.assign(n + 1, Vec2::Zero());
  const Vec2 fT = model.drift(cycle.states.back());
  Vec2 z = fT * (target / fT.squaredNorm());
  int period = 0;
  double change = 0.0;
  for (; period < options.max_periods; ++period) {
    const Vec2 previous = z;
    out.Z[n] = z;
    for (int k = n; k > 0; --k) {
      const int f = 2 * k;
      const Vec2 k1 = rhs(f, z);
      const Vec2 k2 = rhs(f - 1, z + 0.5 * h * k1);
      const Vec2 k3 = rhs(f - 1, z + 0.5 * h * k2);
      const Vec2 k4 = rhs(f - 2, z + h * k3);
      z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      out.Z[k - 1] = z;
    }
    const double scale = target / pairing(0, z);
    for (auto& v : out.Z) v *= scale;
    z = out.Z[0];
    // Fixed point of the normalised monodromy map.
    change = (z - previous * (target / pairing(n, previous))).norm();
    if (period > 0 && change < options.periodicity_tolerance * z.norm()) break;
  }
  out.periods = period + 1;
  if (period >= options.max_periods)
    throw DomainError(fmt::format(
        "adjoint_prc: adjoint not periodic after {} periods (change {:.3g})",
        options.max_periods, change));

  double mean = 0.0;
  for (int k = 0; k < n; ++k) mean += pairing(k, out.Z[k]);
  mean /= n;
  for (auto& v : out.Z) v *= target / mean;
  for (int k = 0; k <= n; ++k)
    out.normalization_residual =
        std::max(out.normalization_residual, std::abs(pairing(k, out.Z[k]) - target) / target);
  out.periodicity_error = (out.Z[0] - out.Z[n]).norm();
  return out;
}

double malkin_average(const LimitCycle& cycle, const AdjointSolution& adjoint,
                      const Perturbation& G) {
  const int n = static_cast<int>(cycle.times.size()) - 1;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = adjoint.Z[k].dot(G(cycle.states[k], cycle.times[k]));
    const double b = adjoint.Z[k + 1].dot(G(cycle.states[k + 1], cycle.times[k + 1]));
    acc += 0.5 * (a + b) * (cycle.times[k + 1] - cycle.times[k]);
  }
  return acc / cycle.period;
}

}  // namespace stochphase
