#include "stochphase/spectral.hpp"

#include "stochphase/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace stochphase {

namespace {

using Complex = std::complex<double>;
using ComplexSparse = Eigen::SparseMatrix<Complex>;
using ComplexLU = Eigen::SparseLU<ComplexSparse, Eigen::COLAMDOrdering<int>>;

ComplexSparse shifted(const SparseOperator::Matrix& m, Complex shift) {
  ComplexSparse out = m.cast<Complex>();
  for (int k = 0; k < out.rows(); ++k) out.coeffRef(k, k) -= shift;
  out.makeCompressed();
  return out;
}

void factorize(ComplexLU& lu, const ComplexSparse& a, const char* what) {
  lu.compute(a);
  if (lu.info() != Eigen::Success)
    throw EigenSolverError(fmt::format("{}: factorisation failed", what));
}

double residual_of(const SparseOperator::Matrix& m, Complex lambda,
                   const Eigen::VectorXcd& v) {
  const Eigen::VectorXcd r = m.cast<Complex>() * v - lambda * v;
  return r.norm() / v.norm();
}

double inf_norm(const SparseOperator::Matrix& m) {
  double out = 0.0;
  for (int row = 0; row < m.outerSize(); ++row) {
    double s = 0.0;
    for (SparseOperator::Matrix::InnerIterator it(m, row); it; ++it)
      s += std::abs(it.value());
    out = std::max(out, s);
  }
  return out;
}

}  // namespace

std::vector<RitzPair> eigenpairs_near(const SparseOperator& backward,
                                      Complex shift, int count,
                                      const EigenOptions& options) {
  const int n = static_cast<int>(backward.matrix.rows());
  const int m = std::min(options.krylov_dim, n - 1);
  if (count < 1 || m < count + 2)
    throw ParameterError(fmt::format(
        "eigenpairs_near: krylov_dim {} too small for {} eigenpairs",
        options.krylov_dim, count));

  ComplexLU lu;
  factorize(lu, shifted(backward.matrix, shift), "eigenpairs_near");

  Eigen::MatrixXcd V(n, m + 1);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
  Eigen::VectorXcd start(n);
  for (int k = 0; k < n; ++k)
    start[k] = Complex(1.0 + 0.3 * std::sin(0.37 * k), 0.2 * std::cos(1.3 * k));

  std::vector<RitzPair> best;
  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    V.col(0) = start / start.norm();
    H.setZero();
    int steps = m;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXcd w = lu.solve(V.col(j));
      // two passes of classical Gram-Schmidt
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXcd h = V.leftCols(j + 1).adjoint() * w;
        w -= V.leftCols(j + 1) * h;
        H.col(j).head(j + 1) += h;
      }
      const double beta = w.norm();
      H(j + 1, j) = beta;
      if (beta < 1e-14 * H.col(j).norm()) {
        steps = j + 1;
        break;
      }
      V.col(j + 1) = w / beta;
    }

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(H.topLeftCorner(steps, steps));
    const Eigen::VectorXcd theta = es.eigenvalues();
    std::vector<int> order(steps);
    for (int k = 0; k < steps; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(theta[a]) > std::abs(theta[b]);
    });

    const int want = std::min(count, steps);
    const double tail = steps < m ? 0.0 : std::abs(H(steps, steps - 1));
    bool converged = true;
    best.clear();
    for (int k = 0; k < want; ++k) {
      const int idx = order[k];
      const Eigen::VectorXcd y = es.eigenvectors().col(idx);
      const double ritz_res = tail * std::abs(y[steps - 1]) / y.norm();
      if (ritz_res > options.tolerance * std::abs(theta[idx])) converged = false;
      RitzPair p;
      p.lambda = shift + 1.0 / theta[idx];
      p.vector = V.leftCols(steps) * y;
      p.vector /= p.vector.norm();
      p.residual = residual_of(backward.matrix, p.lambda, p.vector);
      best.push_back(std::move(p));
    }
    if (converged) return best;
    start.setZero();
    for (const auto& p : best) start += p.vector;
  }
  throw EigenSolverError(fmt::format(
      "eigenpairs_near: Arnoldi did not converge after {} restarts",
      options.max_restarts));
}

Eigenpair leading_eigenpair(const SparseOperator& backward,
                            const EigenOptions& options) {
  const Complex shift = options.shift.value_or(Complex(0.0, options.omega_guess));
  const int count = std::max(2, std::min(8, options.krylov_dim / 4));
  std::vector<RitzPair> pairs = eigenpairs_near(backward, shift, count, options);

  const double scale = std::max(1.0, inf_norm(backward.matrix));
  const double trivial_tol = 1e-8 * std::max(1.0, std::abs(shift));

  Eigenpair out;
  for (const auto& p : pairs) out.ritz_values.push_back(p.lambda);

  const RitzPair* lead = nullptr;
  for (const auto& p : pairs) {
    if (std::abs(p.lambda) <= trivial_tol) continue;
    if (!lead || p.lambda.real() > lead->lambda.real()) lead = &p;
  }
  if (!lead)
    throw EigenSolverError("leading_eigenpair: no non-trivial eigenvalue found");
  const Complex l1 = lead->lambda;
  if (std::abs(l1.imag()) <= 1e-8 * std::abs(l1)) {
    throw EigenSolverError(fmt::format(
        "leading_eigenpair: leading non-trivial eigenvalue {:.6g} is real",
        l1.real()));
  }
  const double sep = 1e-6 * std::abs(l1);
  for (const auto& p : pairs) {
    if (&p == lead || std::abs(p.lambda) <= trivial_tol) continue;
    if (std::abs(p.lambda - l1) < sep || std::abs(p.lambda - std::conj(l1)) < sep) {
      if (std::abs(p.lambda - l1) < sep)
        throw EigenSolverError(
            "leading_eigenpair: leading eigenvalue is not simple");
      continue;
    }
    if (std::abs(p.lambda.real() - l1.real()) < 1e-9 * std::max(1.0, std::abs(l1.real())) &&
        std::abs(std::abs(p.lambda.imag()) - std::abs(l1.imag())) > sep) {
      throw EigenSolverError(
          "leading_eigenpair: two distinct eigenvalues share the leading real part");
    }
  }

  // Inverse iteration at the Ritz value, with Rayleigh-quotient updates.
  Complex lambda = l1;
  Eigen::VectorXcd q = lead->vector;
  const Eigen::SparseMatrix<Complex, Eigen::RowMajor> A =
      backward.matrix.cast<Complex>();
  double res = residual_of(backward.matrix, lambda, q);
  if (res > options.refine_tolerance * scale) {
    ComplexLU lu;
    factorize(lu, shifted(backward.matrix, lambda * (1.0 + 1e-10)),
              "leading_eigenpair");
    for (int it = 0; it < 20 && res > options.refine_tolerance * scale; ++it) {
      q = lu.solve(q);
      q /= q.norm();
      const Eigen::VectorXcd aq = A * q;
      lambda = q.dot(aq);  // conjugates q
      res = (aq - lambda * q).norm();
    }
  }
  if (!(res <= 1e-8 * scale)) {
    throw EigenSolverError(fmt::format(
        "leading_eigenpair: eigen-residual {:.3g} above tolerance", res));
  }
  if (lambda.imag() < 0.0) {
    lambda = std::conj(lambda);
    q = q.conjugate().eval();
  }

  const AnnulusGrid& grid = *backward.grid;
  const Eigen::VectorXd& w = grid.weights();
  const double wnorm = std::sqrt((w.array() * q.cwiseAbs2().array()).sum());
  q /= wnorm;
  const Complex anchor = q[grid.anchor_node()];
  if (std::abs(anchor) == 0.0)
    throw EigenSolverError("leading_eigenpair: eigenfunction vanishes at the anchor node");
  q *= std::abs(anchor) / anchor;

  out.lambda = lambda;
  out.residual = residual_of(backward.matrix, lambda, q);
  out.Q = ComplexField(backward.grid, std::move(q), "Q", "1");
  return out;
}

PhaseAmplitude phase_amplitude(const ComplexField& Q,
                               const std::vector<bool>& mask, double eps) {
  const AnnulusGrid& g = *Q.grid;
  const int na = g.n_alpha(), nb = g.n_beta();
  const int n = g.size();
  auto active = [&](int node) { return mask.empty() || mask[node]; };

  Eigen::VectorXd u = Q.values.cwiseAbs();
  const double peak = u.maxCoeff();
  for (int k = 0; k < n; ++k) {
    if (active(k) && !(u[k] >= eps * peak)) {
      const auto [i, j] = g.indices(k);
      throw ZeroCrossingError(fmt::format(
          "phase_amplitude: |Q| = {:.3g} below {:.3g} max|Q| at node ({}, {})",
          u[k], eps, i, j));
    }
  }

  Eigen::VectorXd arg(n);
  for (int k = 0; k < n; ++k) arg[k] = std::arg(Q.values[k]);

  Eigen::VectorXd psi(n);
  std::vector<int> row_winding(nb);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (int j = 0; j < nb; ++j) {
    psi[g.index(0, j)] = arg[g.index(0, j)];
    for (int i = 1; i < na; ++i) {
      psi[g.index(i, j)] = psi[g.index(i - 1, j)] +
                           wrap_pi(arg[g.index(i, j)] - arg[g.index(i - 1, j)]);
    }
    const double closing = psi[g.index(na - 1, j)] +
                           wrap_pi(arg[g.index(0, j)] - arg[g.index(na - 1, j)]);
    row_winding[j] =
        static_cast<int>(std::lround((closing - psi[g.index(0, j)]) / two_pi));
  }

  auto row_active = [&](int j) {
    for (int i = 0; i < na; ++i)
      if (!active(g.index(i, j))) return false;
    return true;
  };
  int winding = 0;
  bool have = false;
  for (int j = 0; j < nb; ++j) {
    if (!row_active(j)) continue;
    if (!have) {
      winding = row_winding[j];
      have = true;
    } else if (row_winding[j] != winding) {
      throw ZeroCrossingError(fmt::format(
          "phase_amplitude: winding {} on row {} differs from {}; the phaseless "
          "set intrudes into the annulus",
          row_winding[j], j, winding));
    }
  }
  if (!have) winding = row_winding[g.n_beta() / 2];

  // Align rows to each other, moving outward from the anchor row.
  const int ja = g.indices(g.anchor_node()).second;
  auto shift_row = [&](int j, int ref) {
    const double target = psi[g.index(0, ref)] +
                          wrap_pi(arg[g.index(0, j)] - arg[g.index(0, ref)]);
    const double d = target - psi[g.index(0, j)];
    for (int i = 0; i < na; ++i) psi[g.index(i, j)] += d;
  };
  psi.segment(g.index(0, ja), na).array() -= psi[g.index(0, ja)] - arg[g.index(0, ja)];
  for (int j = ja + 1; j < nb; ++j) shift_row(j, j - 1);
  for (int j = ja - 1; j >= 0; --j) shift_row(j, j + 1);

  PhaseAmplitude out;
  out.winding = winding;
  Eigen::VectorXd periodic(n);
  for (int k = 0; k < n; ++k) periodic[k] = psi[k] - winding * g.alpha(g.indices(k).first);
  out.u = ScalarField(Q.grid, std::move(u), "u", "1");
  out.psi.periodic = ScalarField(Q.grid, std::move(periodic), "psi", "rad");
  out.psi.slope = winding;
  return out;
}

Eigen::VectorXd omega_values(const ScalarField& u, const LiftedField& psi,
                             const OscillatorModel& model, int stride) {
  const AnnulusGrid& g = *u.grid;
  const int na = g.n_alpha(), nb = g.n_beta(), s = stride;
  const double ha = s * g.h_alpha(), hb = s * g.h_beta();
  Eigen::VectorXd out = Eigen::VectorXd::Constant(
      g.size(), std::numeric_limits<double>::quiet_NaN());
  const auto& up = u.values;
  const auto& pp = psi.periodic.values;
  for (int j = s; j + s < nb; ++j) {
    for (int i = 0; i < na; ++i) {
      const int e = g.index(g.wrap_alpha_index(i + s), j);
      const int w = g.index(g.wrap_alpha_index(i - s), j);
      const int nn = g.index(i, j + s);
      const int ss = g.index(i, j - s);
      if (!(up[e] > 0.0 && up[w] > 0.0 && up[nn] > 0.0 && up[ss] > 0.0)) continue;
      const double lua = (std::log(up[e]) - std::log(up[w])) / (2.0 * ha);
      const double lub = (std::log(up[nn]) - std::log(up[ss])) / (2.0 * hb);
      const double pa = (pp[e] - pp[w]) / (2.0 * ha) + psi.slope;
      const double pb = (pp[nn] - pp[ss]) / (2.0 * hb);
      const auto c = computational_coefficients(model, g, g.alpha(i), g.beta(j));
      out[g.index(i, j)] = 2.0 * (c.diff_aa * lua * pa +
                                  c.diff_ab * (lua * pb + lub * pa) +
                                  c.diff_bb * lub * pb);
    }
  }
  return out;
}

ScalarField omega_field(const ScalarField& u, const LiftedField& psi,
                        const OscillatorModel& model) {
  return ScalarField(u.grid, omega_values(u, psi, model, 1), "Omega", "rad/time");
}

double delta_omega(double Tbar, double omega1) {
  return 2.0 * std::numbers::pi / Tbar - omega1;
}

SpectralSolution solve_spectral(const OscillatorModel& model,
                                const SparseOperator& backward, double Tbar,
                                const std::vector<bool>& mask,
                                EigenOptions options) {
  if (!options.shift)
    options.shift = Complex(0.0, 2.0 * std::numbers::pi / Tbar);
  Eigenpair eig = leading_eigenpair(backward, options);
  PhaseAmplitude pa = phase_amplitude(eig.Q, mask);

  SpectralSolution out;
  out.lambda1 = eig.lambda;
  out.mu1 = eig.lambda.real();
  out.omega1 = eig.lambda.imag();
  out.arg_lambda1 = std::arg(eig.lambda);
  out.eigen_residual = eig.residual;
  out.omega = omega_field(pa.u, pa.psi, model);
  out.generator_psi = ScalarField(backward.grid, apply_lifted(backward, pa.psi),
                                  "Lpsi", "rad/time");
  out.Q = std::move(eig.Q);
  out.u = std::move(pa.u);
  out.psi = std::move(pa.psi);
  out.winding = pa.winding;
  out.Tbar = Tbar;
  out.delta_omega = delta_omega(Tbar, out.omega1);
  out.mask = mask.empty() ? std::vector<bool>(backward.grid->size(), true) : mask;
  return out;
}

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

DecompositionResult phase_decomposition(const TrajectoryEnsemble& ens,
                                        const SpectralSolution& spec,
                                        const OscillatorModel& model,
                                        double burn_in_fraction) {
  (void)model;
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
    throw ParameterError("phase_decomposition: burn-in fraction must lie in [0, 1)");
  const AnnulusGrid& g = *spec.u.grid;
  const int first = static_cast<int>(std::floor(burn_in_fraction * ens.n_records));
  const double dt = ens.record_spacing();

  DecompositionResult out;
  long masked = 0, total_points = 0;
  for (int s = 0; s < ens.n_samples; ++s) {
    double dpsi = 0.0, dyn = 0.0, geo = 0.0, time = 0.0;
    bool prev_ok = false;
    double prev_psi = 0.0, prev_l = 0.0, prev_o = 0.0;
    for (int r = first; r < ens.n_records; ++r) {
      const Vec2 x = ens.state(s, r);
      ++total_points;
      bool ok = g.contains(x);
      double p = 0.0, l = 0.0, o = 0.0;
      if (ok) {
        p = spec.psi.interpolate(x);
        l = spec.generator_psi.interpolate(x);
        o = spec.omega.interpolate(x);
        ok = std::isfinite(p) && std::isfinite(l) && std::isfinite(o);
      }
      if (!ok) ++masked;
      if (ok && prev_ok) {
        dpsi += wrap_pi(p - prev_psi);
        dyn += 0.5 * (l + prev_l) * dt;
        geo += 0.5 * (o + prev_o) * dt;
        time += dt;
      }
      prev_ok = ok;
      prev_psi = p;
      prev_l = l;
      prev_o = o;
    }
    if (time > 0.0) {
      out.total.push_back(dpsi / time);
      out.dynamical.push_back(dyn / time);
      out.geometric.push_back(geo / time);
    }
  }
  out.masked_fraction =
      total_points ? static_cast<double>(masked) / static_cast<double>(total_points) : 1.0;
  if (out.masked_fraction > 0.1)
    throw DomainError(fmt::format(
        "phase_decomposition: {:.1f}% of samples masked (limit 10%)",
        100.0 * out.masked_fraction));
  out.mean_total = mean(out.total);
  out.se_total = std_error(out.total);
  out.mean_dynamical = mean(out.dynamical);
  out.se_dynamical = std_error(out.dynamical);
  out.mean_geometric = mean(out.geometric);
  out.se_geometric = std_error(out.geometric);
  out.identity_residual = std::abs(out.mean_dynamical + out.mean_geometric - spec.omega1);
  return out;
}

double stationary_average(const Eigen::VectorXd& field, const ScalarField& density) {
  const Eigen::VectorXd& w = density.grid->weights();
  double num = 0.0, den = 0.0;
  for (int k = 0; k < field.size(); ++k) {
    if (!std::isfinite(field[k])) continue;
    num += w[k] * density.values[k] * field[k];
    den += w[k] * density.values[k];
  }
  if (!(den > 0.0)) throw DomainError("stationary_average: no finite nodes");
  return num / den;
}

}  // namespace stochphase
