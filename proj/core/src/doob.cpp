#include "stochphase/doob.hpp"

#include "stochphase/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace stochphase {

namespace {

void require_positive(const ScalarField& h, const char* what) {
  for (int k = 0; k < h.values.size(); ++k) {
    if (!(h.values[k] > 0.0)) {
      const auto [i, j] = h.grid->indices(k);
      throw DomainError(fmt::format("{}: h = {:.3g} is not positive at node ({}, {})",
                                    what, h.values[k], i, j));
    }
  }
}

}  // namespace

SparseOperator doob_generator(const SparseOperator& backward,
                              const ScalarField& h,
                              const DoobPotential& potential) {
  if (!h.grid || h.values.size() != backward.matrix.rows() ||
      h.grid->size() != backward.grid->size())
    throw DomainError("doob_generator: h lives on a different grid");
  require_positive(h, "doob_generator");

  SparseOperator out = backward;
  const bool conservative = std::holds_alternative<ConservativePotential>(potential);
  const double f = conservative ? 0.0 : std::get<double>(potential);
  auto& m = out.matrix;
  for (int row = 0; row < m.outerSize(); ++row) {
    double off = 0.0;
    double* diag = nullptr;
    for (SparseOperator::Matrix::InnerIterator it(m, row); it; ++it) {
      if (it.col() == row) {
        diag = &it.valueRef();
        continue;
      }
      it.valueRef() *= h.values[it.col()] / h.values[row];
      off += it.value();
    }
    if (!diag) throw DomainError("doob_generator: operator has no diagonal entry");
    if (conservative) {
      *diag = -off;
    } else {
      *diag -= f;
    }
  }
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> grad_log(const ScalarField& h) {
  require_positive(h, "grad_log");
  const AnnulusGrid& g = *h.grid;
  const int na = g.n_alpha(), nb = g.n_beta();
  const double ha = g.h_alpha(), hb = g.h_beta();
  Eigen::VectorXd lh = h.values.array().log();
  Eigen::VectorXd gx(g.size()), gy(g.size());
  for (int j = 0; j < nb; ++j) {
    for (int i = 0; i < na; ++i) {
      const int p = g.index(i, j);
      const double da = (lh[g.index(g.wrap_alpha_index(i + 1), j)] -
                         lh[g.index(g.wrap_alpha_index(i - 1), j)]) /
                        (2.0 * ha);
      double db;
      if (j == 0) {
        db = (-3.0 * lh[p] + 4.0 * lh[g.index(i, 1)] - lh[g.index(i, 2)]) / (2.0 * hb);
      } else if (j == nb - 1) {
        db = (3.0 * lh[p] - 4.0 * lh[g.index(i, nb - 2)] + lh[g.index(i, nb - 3)]) /
             (2.0 * hb);
      } else {
        db = (lh[g.index(i, j + 1)] - lh[g.index(i, j - 1)]) / (2.0 * hb);
      }
      const Vec2 d = g.position(p) - g.center();
      const double r2 = d.squaredNorm(), r = std::sqrt(r2);
      const Vec2 grad_a(-d.y() / r2, d.x() / r2);
      const Vec2 grad_b = d / (r * g.radial_scale());
      const Vec2 grad = da * grad_a + db * grad_b;
      gx[p] = grad.x();
      gy[p] = grad.y();
    }
  }
  return {gx, gy};
}

namespace {

OscillatorModel transformed(const OscillatorModel& base, const ScalarField& cx,
                            const ScalarField& cy) {
  auto drift = [base, cx, cy](const Vec2& x) -> Vec2 {
    if (!cx.grid->contains(x, 1e-12))
      throw DomainError(fmt::format(
          "Doob drift evaluated outside the annulus at ({:.4g}, {:.4g})", x.x(), x.y()));
    return base.drift(x) + Vec2(cx.interpolate(x), cy.interpolate(x));
  };
  return base.with_drift(base.name() + "_doob", drift);
}

}  // namespace

DoobTransformedModel::DoobTransformedModel(const OscillatorModel& base,
                                           const ScalarField& h)
    : base_(base), h_(h), model_(base) {
  auto [gx, gy] = grad_log(h);
  const AnnulusGrid& g = *h.grid;
  Eigen::VectorXd cx(g.size()), cy(g.size());
  for (int k = 0; k < g.size(); ++k) {
    const Vec2 c = 2.0 * base.diffusion_tensor(g.position(k)) * Vec2(gx[k], gy[k]);
    if (!c.allFinite()) throw DomainError("Doob correction is not finite");
    cx[k] = c.x();
    cy[k] = c.y();
  }
  cx_ = ScalarField(h.grid, std::move(cx), "doob_cx", "1/time");
  cy_ = ScalarField(h.grid, std::move(cy), "doob_cy", "1/time");
  model_ = transformed(base_, cx_, cy_);
}

Vec2 DoobTransformedModel::correction(const Vec2& x) const {
  if (!h_.grid->contains(x, 1e-12))
    throw DomainError("Doob correction evaluated outside the annulus");
  return {cx_.interpolate(x), cy_.interpolate(x)};
}

DoobTransformedModel doob_transformed_model(const OscillatorModel& model,
                                            const ScalarField& h) {
  return DoobTransformedModel(model, h);
}

PhaseVelocity mean_phase_velocity(const OscillatorModel& model,
                                  const LiftedField& psi, const SimConfig& cfg,
                                  double burn_in_fraction) {
  const TrajectoryEnsemble ens = euler_maruyama(model, cfg);
  const int first = static_cast<int>(std::floor(burn_in_fraction * ens.n_records));
  const double duration = ens.times.back() - ens.times[first];
  if (!(duration > 0.0)) throw ParameterError("mean_phase_velocity: empty time window");
  std::vector<double> v(ens.n_samples);
  for (int s = 0; s < ens.n_samples; ++s) {
    double prev = psi.interpolate(ens.state(s, first));
    double acc = 0.0;
    for (int r = first + 1; r < ens.n_records; ++r) {
      const double cur = psi.interpolate(ens.state(s, r));
      acc += wrap_pi(cur - prev);
      prev = cur;
    }
    v[s] = acc / duration;
  }
  PhaseVelocity out;
  out.n = ens.n_samples;
  for (double x : v) out.mean += x;
  out.mean /= out.n;
  if (out.n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std_error = std::sqrt(ss / (out.n - 1) / out.n);
  }
  return out;
}

PhaseVelocity conditioned_phase_velocity(const DoobTransformedModel& model,
                                         const SpectralSolution& spectral,
                                         const SimConfig& cfg) {
  return mean_phase_velocity(model.model(), spectral.psi, cfg, 0.0);
}

}  // namespace stochphase
