#include "stochphase/operators.hpp"

#include "stochphase/errors.hpp"
#include "stochphase/io.hpp"

#include <Eigen/SparseLU>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>

namespace stochphase {

ComputationalCoefficients computational_coefficients(
    const OscillatorModel& model, const AnnulusGrid& grid, double alpha,
    double beta) {
  const Vec2 x = grid.to_physical(alpha, beta);
  const Vec2 d = x - grid.center();
  const double X = d.x(), Y = d.y();
  const double r2 = X * X + Y * Y;
  const double r = std::sqrt(r2);
  const double rho = grid.radial_scale();

  const Vec2 grad_a(-Y / r2, X / r2);
  const Vec2 grad_b(X / (r * rho), Y / (r * rho));
  Mat2 hess_a;
  hess_a << 2.0 * X * Y, Y * Y - X * X, Y * Y - X * X, -2.0 * X * Y;
  hess_a /= r2 * r2;
  Mat2 hess_b;
  hess_b << Y * Y, -X * Y, -X * Y, X * X;
  hess_b /= rho * r2 * r;

  const Vec2 f = model.drift(x);
  const Mat2 D = model.diffusion_tensor(x);

  ComputationalCoefficients c;
  c.jacobian = r * rho;
  c.drift_alpha = f.dot(grad_a) + D.cwiseProduct(hess_a).sum();
  c.drift_beta = f.dot(grad_b) + D.cwiseProduct(hess_b).sum();
  c.diff_aa = grad_a.dot(D * grad_a);
  c.diff_bb = grad_b.dot(D * grad_b);
  c.diff_ab = grad_a.dot(D * grad_b);
  return c;
}

namespace {

/// Edge between node p and its "+" neighbour q in alpha or beta.
struct Edge {
  int p = 0;
  int q = 0;
  double kappa = 0.0;  ///< symmetric (diffusive) weight
  double phi = 0.0;    ///< advective weight
  bool along_alpha = true;
};

/// Visits every edge of the discretisation once. Nodal J D̃_kk values are
/// differenced across the edge to form the divergence-form advection.
template <class Fn>
void for_each_edge(const OscillatorModel& model, const AnnulusGrid& grid,
                   Fn&& fn) {
  const int na = grid.n_alpha(), nb = grid.n_beta();
  const double ha = grid.h_alpha(), hb = grid.h_beta();

  std::vector<double> ka(grid.size()), kb(grid.size());
  for (int j = 0; j < nb; ++j) {
    for (int i = 0; i < na; ++i) {
      const auto c =
          computational_coefficients(model, grid, grid.alpha(i), grid.beta(j));
      ka[grid.index(i, j)] = c.jacobian * c.diff_aa;
      kb[grid.index(i, j)] = c.jacobian * c.diff_bb;
    }
  }

  for (int j = 0; j < nb; ++j) {
    const double trapezoid = (j == 0 || j == nb - 1) ? 0.5 : 1.0;
    const double face_b = hb * trapezoid;
    for (int i = 0; i < na; ++i) {
      const int p = grid.index(i, j);
      const int q = grid.index(grid.wrap_alpha_index(i + 1), j);
      const auto c = computational_coefficients(model, grid,
                                                grid.alpha(i) + 0.5 * ha,
                                                grid.beta(j));
      const double jc = c.jacobian * c.drift_alpha - (ka[q] - ka[p]) / ha;
      fn(Edge{p, q, c.jacobian * c.diff_aa * face_b / ha, jc * face_b, true});
    }
  }
  for (int j = 0; j + 1 < nb; ++j) {
    for (int i = 0; i < na; ++i) {
      const int p = grid.index(i, j);
      const int q = grid.index(i, j + 1);
      const auto c = computational_coefficients(model, grid, grid.alpha(i),
                                                grid.beta(j) + 0.5 * hb);
      const double jc = c.jacobian * c.drift_beta - (kb[q] - kb[p]) / hb;
      fn(Edge{p, q, c.jacobian * c.diff_bb * ha / hb, jc * ha, false});
    }
  }
}

void check_boundary_diffusion(const OscillatorModel& model,
                              const AnnulusGrid& grid) {
  for (int j : {0, grid.n_beta() - 1}) {
    for (int i = 0; i < grid.n_alpha(); ++i) {
      const auto c =
          computational_coefficients(model, grid, grid.alpha(i), grid.beta(j));
      if (!(c.diff_bb > 0.0)) {
        throw DomainError(fmt::format(
            "assembly: normal diffusion {} is not positive at boundary node "
            "({}, {})",
            c.diff_bb, i, j));
      }
    }
  }
}

}  // namespace

SparseOperator assemble_backward(const OscillatorModel& model,
                                 std::shared_ptr<const AnnulusGrid> grid_ptr,
                                 AssemblyReport* report) {
  const AnnulusGrid& grid = *grid_ptr;
  check_boundary_diffusion(model, grid);

  const int n = grid.size();
  const Eigen::VectorXd& w = grid.weights();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * 9);

  AssemblyReport local;
  std::vector<bool> high_pe(n, false);

  for_each_edge(model, grid, [&](const Edge& e) {
    // Row p: (κ + φ/2)(u_q - u_p) / w_p ; row q: (κ - φ/2)(u_p - u_q) / w_q.
    triplets.emplace_back(e.p, e.q, (e.kappa + 0.5 * e.phi) / w[e.p]);
    triplets.emplace_back(e.q, e.p, (e.kappa - 0.5 * e.phi) / w[e.q]);
    const double pe = e.kappa > 0.0 ? std::abs(e.phi) / e.kappa
                                    : std::numeric_limits<double>::infinity();
    local.max_peclet = std::max(local.max_peclet, pe);
    if (pe > 2.0) high_pe[e.p] = high_pe[e.q] = true;
  });

  // Mixed derivative, interior rows only (it vanishes under the reflecting
  // condition on the boundary circles).
  const int na = grid.n_alpha(), nb = grid.n_beta();
  const double denom = 4.0 * grid.h_alpha() * grid.h_beta();
  for (int j = 1; j + 1 < nb; ++j) {
    for (int i = 0; i < na; ++i) {
      const auto c =
          computational_coefficients(model, grid, grid.alpha(i), grid.beta(j));
      if (c.diff_ab == 0.0) continue;
      const double s = 2.0 * c.diff_ab / denom;
      const int p = grid.index(i, j);
      const int ip = grid.wrap_alpha_index(i + 1);
      const int im = grid.wrap_alpha_index(i - 1);
      triplets.emplace_back(p, grid.index(ip, j + 1), s);
      triplets.emplace_back(p, grid.index(ip, j - 1), -s);
      triplets.emplace_back(p, grid.index(im, j + 1), -s);
      triplets.emplace_back(p, grid.index(im, j - 1), s);
    }
  }

  for (int p = 0; p < n; ++p) triplets.emplace_back(p, p, 0.0);

  SparseOperator op;
  op.grid = std::move(grid_ptr);
  op.kind = OperatorKind::kBackward;
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();

  // Diagonal closes each row to an exact zero sum, accumulated in column order.
  for (int p = 0; p < n; ++p) {
    double off = 0.0;
    double* diag = nullptr;
    for (SparseOperator::Matrix::InnerIterator it(op.matrix, p); it; ++it) {
      if (it.col() == p) {
        diag = &it.valueRef();
      } else {
        off += it.value();
      }
    }
    *diag = -off;
  }

  local.high_peclet_nodes =
      static_cast<int>(std::count(high_pe.begin(), high_pe.end(), true));
  if (local.high_peclet_nodes > 0) {
    std::clog << fmt::format(
        "[stochphase] warning: cell Péclet number up to {:.3g} at {} nodes; "
        "central differences may oscillate, consider refining the grid\n",
        local.max_peclet, local.high_peclet_nodes);
  }
  if (report) *report = local;
  return op;
}

SparseOperator forward_from_backward(const SparseOperator& backward) {
  const Eigen::VectorXd& w = backward.grid->weights();
  const int n = static_cast<int>(w.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(backward.matrix.nonZeros());
  for (int row = 0; row < backward.matrix.outerSize(); ++row) {
    for (SparseOperator::Matrix::InnerIterator it(backward.matrix, row); it;
         ++it) {
      const int col = static_cast<int>(it.col());
      // L(col, row) = L†(row, col) w_row / w_col
      triplets.emplace_back(col, row, it.value() * w[row] / w[col]);
    }
  }
  SparseOperator op;
  op.grid = backward.grid;
  op.kind = OperatorKind::kForward;
  op.boundary = backward.boundary;
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  return op;
}

SparseOperator assemble_forward(const OscillatorModel& model,
                                std::shared_ptr<const AnnulusGrid> grid,
                                AssemblyReport* report) {
  return forward_from_backward(assemble_backward(model, std::move(grid), report));
}

Eigen::VectorXd apply_to_alpha(const SparseOperator& op) {
  const AnnulusGrid& grid = *op.grid;
  Eigen::VectorXd out(grid.size());
  for (int row = 0; row < op.matrix.outerSize(); ++row) {
    const double a_row = grid.alpha(grid.indices(row).first);
    double acc = 0.0;
    for (SparseOperator::Matrix::InnerIterator it(op.matrix, row); it; ++it) {
      const double a_col = grid.alpha(grid.indices(static_cast<int>(it.col())).first);
      acc += it.value() * (a_row + wrap_pi(a_col - a_row));
    }
    out[row] = acc;
  }
  return out;
}

Eigen::VectorXd apply_lifted(const SparseOperator& op, const LiftedField& f) {
  Eigen::VectorXd out = op.matrix * f.periodic.values;
  if (f.slope != 0.0) out += f.slope * apply_to_alpha(op);
  return out;
}

namespace {

template <class Value, class Accessor>
Eigen::Matrix<Value, Eigen::Dynamic, 1> stencil_impl(
    const OscillatorModel& model, const AnnulusGrid& grid, int s,
    Accessor&& value) {
  const int na = grid.n_alpha(), nb = grid.n_beta();
  const double ha = s * grid.h_alpha(), hb = s * grid.h_beta();
  Eigen::Matrix<Value, Eigen::Dynamic, 1> out(grid.size());
  out.setConstant(Value(std::numeric_limits<double>::quiet_NaN()));

  auto coeff = [&](double a, double b) {
    return computational_coefficients(model, grid, a, b);
  };
  for (int j = s; j + s < nb; ++j) {
    const double b0 = grid.beta(j);
    for (int i = 0; i < na; ++i) {
      const double a0 = grid.alpha(i);
      const auto cp = coeff(a0, b0);
      const double w = cp.jacobian * ha * hb;
      const double ka_p = cp.jacobian * cp.diff_aa;
      const double kb_p = cp.jacobian * cp.diff_bb;
      const Value u0 = value(i, j);
      Value acc = Value(0.0);

      {  // alpha edges
        const auto cq = coeff(a0 + ha, b0);
        const auto cm = coeff(a0 - ha, b0);
        const auto fp = coeff(a0 + 0.5 * ha, b0);
        const auto fm = coeff(a0 - 0.5 * ha, b0);
        const double kap = fp.jacobian * fp.diff_aa * hb / ha;
        const double phip =
            (fp.jacobian * fp.drift_alpha - (cq.jacobian * cq.diff_aa - ka_p) / ha) * hb;
        const double kam = fm.jacobian * fm.diff_aa * hb / ha;
        const double phim =
            (fm.jacobian * fm.drift_alpha - (ka_p - cm.jacobian * cm.diff_aa) / ha) * hb;
        acc += (kap + 0.5 * phip) * (value(i + s, j) - u0);
        acc += (kam - 0.5 * phim) * (value(i - s, j) - u0);
      }
      {  // beta edges
        const auto cq = coeff(a0, b0 + hb);
        const auto cm = coeff(a0, b0 - hb);
        const auto fp = coeff(a0, b0 + 0.5 * hb);
        const auto fm = coeff(a0, b0 - 0.5 * hb);
        const double kap = fp.jacobian * fp.diff_bb * ha / hb;
        const double phip =
            (fp.jacobian * fp.drift_beta - (cq.jacobian * cq.diff_bb - kb_p) / hb) * ha;
        const double kam = fm.jacobian * fm.diff_bb * ha / hb;
        const double phim =
            (fm.jacobian * fm.drift_beta - (kb_p - cm.jacobian * cm.diff_bb) / hb) * ha;
        acc += (kap + 0.5 * phip) * (value(i, j + s) - u0);
        acc += (kam - 0.5 * phim) * (value(i, j - s) - u0);
      }
      Value result = acc / w;
      if (cp.diff_ab != 0.0) {
        result += 2.0 * cp.diff_ab *
                  (value(i + s, j + s) - value(i + s, j - s) -
                   value(i - s, j + s) + value(i - s, j - s)) /
                  (4.0 * ha * hb);
      }
      out[grid.index(i, j)] = result;
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd apply_backward_stencil(const OscillatorModel& model,
                                       const AnnulusGrid& grid,
                                       const LiftedField& f, int stride) {
  const auto& per = f.periodic.values;
  return stencil_impl<double>(model, grid, stride, [&](int i, int j) {
    return per[grid.index(grid.wrap_alpha_index(i), j)] +
           f.slope * grid.alpha(0) + f.slope * i * grid.h_alpha();
  });
}

Eigen::VectorXcd apply_backward_stencil(const OscillatorModel& model,
                                        const AnnulusGrid& grid,
                                        const Eigen::VectorXcd& f,
                                        int stride) {
  return stencil_impl<std::complex<double>>(
      model, grid, stride,
      [&](int i, int j) { return f[grid.index(grid.wrap_alpha_index(i), j)]; });
}

EdgeFluxes edge_fluxes(const OscillatorModel& model, const AnnulusGrid& grid,
                       const Eigen::VectorXd& p) {
  EdgeFluxes out;
  out.alpha_flux = Eigen::VectorXd::Zero(grid.size());
  out.beta_flux = Eigen::VectorXd::Zero(grid.size());
  for_each_edge(model, grid, [&](const Edge& e) {
    const double g = e.kappa * (p[e.p] - p[e.q]) + 0.5 * e.phi * (p[e.p] + p[e.q]);
    (e.along_alpha ? out.alpha_flux : out.beta_flux)[e.p] = g;
  });
  return out;
}

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;

/// Solves [L b; cᵀ 0][p; ν] = [0; 1].
Eigen::VectorXd bordered_null_vector(const SparseOperator::Matrix& L,
                                     const Eigen::VectorXd& border_row) {
  const int n = static_cast<int>(L.rows());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(L.nonZeros() + 2 * n);
  for (int row = 0; row < L.outerSize(); ++row) {
    for (SparseOperator::Matrix::InnerIterator it(L, row); it; ++it) {
      t.emplace_back(row, static_cast<int>(it.col()), it.value());
    }
  }
  for (int k = 0; k < n; ++k) {
    t.emplace_back(k, n, 1.0);
    t.emplace_back(n, k, border_row[k]);
  }
  ColMatrix M(n + 1, n + 1);
  M.setFromTriplets(t.begin(), t.end());
  M.makeCompressed();

  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) {
    throw SingularSystemError(
        "stationary_density: bordered system is singular; the null space of "
        "the forward operator is not one-dimensional",
        std::numeric_limits<double>::infinity());
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs[n] = 1.0;
  Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) {
    throw SingularSystemError("stationary_density: non-finite solution",
                              std::numeric_limits<double>::infinity());
  }
  return sol.head(n);
}

}  // namespace

ScalarField stationary_density(const SparseOperator& forward,
                               StationaryDiagnostics* diagnostics) {
  const Eigen::VectorXd& w = forward.grid->weights();
  const int n = static_cast<int>(w.size());

  Eigen::VectorXd p = bordered_null_vector(forward.matrix, w);

  // A second bordering row must reproduce the same vector if and only if the
  // null space is one-dimensional.
  Eigen::VectorXd alt(n);
  for (int k = 0; k < n; ++k) {
    alt[k] = w[k] * (1.0 + 0.5 * std::sin(0.6180339887 * (k + 1) * 7.0));
  }
  Eigen::VectorXd q = bordered_null_vector(forward.matrix, alt);
  q /= w.dot(q);
  const double scale = p.cwiseAbs().maxCoeff();
  const double mismatch = (p - q).cwiseAbs().maxCoeff() / scale;
  if (!(mismatch < 1e-6)) {
    throw SingularSystemError(
        fmt::format("stationary_density: null space is not one-dimensional "
                    "(bordering mismatch {:.3g})",
                    mismatch),
        mismatch);
  }

  StationaryDiagnostics diag;
  const double lnorm = [&] {
    double m = 0.0;
    for (int row = 0; row < forward.matrix.outerSize(); ++row) {
      double s = 0.0;
      for (SparseOperator::Matrix::InnerIterator it(forward.matrix, row); it; ++it)
        s += std::abs(it.value());
      m = std::max(m, s);
    }
    return m;
  }();
  diag.residual = (forward.matrix * p).cwiseAbs().maxCoeff() / (lnorm * scale);
  diag.min_before_clip = p.minCoeff();
  const double tiny = 1e-10 * scale;
  for (auto& v : p) {
    if (v < 0.0 && v >= -tiny) {
      v = 0.0;
      ++diag.clipped_nodes;
    }
  }
  if (diag.min_before_clip < -tiny) {
    std::clog << fmt::format(
        "[stochphase] warning: stationary density has negative values down "
        "to {:.3g} (relative {:.3g}); the grid under-resolves the density, "
        "consider refining it\n",
        diag.min_before_clip, diag.min_before_clip / scale);
  }
  p /= w.dot(p);
  if (diagnostics) *diagnostics = diag;
  return ScalarField(forward.grid, std::move(p), "P0", "1/area");
}

namespace {

/// d/dalpha (periodic) and d/dbeta (second-order one-sided on the circles).
void computational_gradient(const AnnulusGrid& grid, const Eigen::VectorXd& v,
                            Eigen::VectorXd& da, Eigen::VectorXd& db) {
  const int na = grid.n_alpha(), nb = grid.n_beta();
  const double ha = grid.h_alpha(), hb = grid.h_beta();
  da.resize(grid.size());
  db.resize(grid.size());
  for (int j = 0; j < nb; ++j) {
    for (int i = 0; i < na; ++i) {
      const int p = grid.index(i, j);
      da[p] = (v[grid.index(grid.wrap_alpha_index(i + 1), j)] -
               v[grid.index(grid.wrap_alpha_index(i - 1), j)]) /
              (2.0 * ha);
      if (j == 0) {
        db[p] = (-3.0 * v[p] + 4.0 * v[grid.index(i, 1)] - v[grid.index(i, 2)]) /
                (2.0 * hb);
      } else if (j == nb - 1) {
        db[p] = (3.0 * v[p] - 4.0 * v[grid.index(i, nb - 2)] +
                 v[grid.index(i, nb - 3)]) /
                (2.0 * hb);
      } else {
        db[p] = (v[grid.index(i, j + 1)] - v[grid.index(i, j - 1)]) / (2.0 * hb);
      }
    }
  }
}

}  // namespace

CurrentField probability_current(const OscillatorModel& model,
                                 std::shared_ptr<const AnnulusGrid> grid_ptr,
                                 const ScalarField& density) {
  const AnnulusGrid& grid = *grid_ptr;
  const int n = grid.size();
  const Eigen::VectorXd& p = density.values;

  Eigen::VectorXd e00(n), e01(n), e11(n);
  std::vector<Vec2> grad_a(n), grad_b(n);
  for (int k = 0; k < n; ++k) {
    const Vec2 x = grid.position(k);
    const Mat2 D = model.diffusion_tensor(x);
    e00[k] = D(0, 0) * p[k];
    e01[k] = D(0, 1) * p[k];
    e11[k] = D(1, 1) * p[k];
    const Vec2 d = x - grid.center();
    const double r2 = d.squaredNorm(), r = std::sqrt(r2);
    grad_a[k] = Vec2(-d.y() / r2, d.x() / r2);
    grad_b[k] = d / (r * grid.radial_scale());
  }
  Eigen::VectorXd a00, b00, a01, b01, a11, b11;
  computational_gradient(grid, e00, a00, b00);
  computational_gradient(grid, e01, a01, b01);
  computational_gradient(grid, e11, a11, b11);

  CurrentField out;
  out.grid = grid_ptr;
  out.jx.resize(n);
  out.jy.resize(n);
  out.j_alpha.resize(n);
  out.j_beta.resize(n);
  for (int k = 0; k < n; ++k) {
    auto ddx = [&](double da, double db) {
      return da * grad_a[k].x() + db * grad_b[k].x();
    };
    auto ddy = [&](double da, double db) {
      return da * grad_a[k].y() + db * grad_b[k].y();
    };
    const Vec2 f = model.drift(grid.position(k));
    const double jx = f.x() * p[k] - ddx(a00[k], b00[k]) - ddy(a01[k], b01[k]);
    const double jy = f.y() * p[k] - ddx(a01[k], b01[k]) - ddy(a11[k], b11[k]);
    const double J = grid.jacobian(k);
    out.jx[k] = jx;
    out.jy[k] = jy;
    out.j_alpha[k] = J * (jx * grad_a[k].x() + jy * grad_a[k].y());
    out.j_beta[k] = J * (jx * grad_b[k].x() + jy * grad_b[k].y());
  }

  const EdgeFluxes fluxes = edge_fluxes(model, grid, p);
  out.section_flux.assign(grid.n_alpha(), 0.0);
  for (int j = 0; j < grid.n_beta(); ++j) {
    for (int i = 0; i < grid.n_alpha(); ++i) {
      out.section_flux[i] += fluxes.alpha_flux[grid.index(i, j)];
    }
  }
  return out;
}

Eigen::VectorXd CurrentField::divergence() const {
  const AnnulusGrid& g = *grid;
  Eigen::VectorXd out(g.size());
  out.setConstant(std::numeric_limits<double>::quiet_NaN());
  const double ha = g.h_alpha(), hb = g.h_beta();
  for (int j = 1; j + 1 < g.n_beta(); ++j) {
    for (int i = 0; i < g.n_alpha(); ++i) {
      const double da = (j_alpha[g.index(g.wrap_alpha_index(i + 1), j)] -
                         j_alpha[g.index(g.wrap_alpha_index(i - 1), j)]) /
                        (2.0 * ha);
      const double db =
          (j_beta[g.index(i, j + 1)] - j_beta[g.index(i, j - 1)]) / (2.0 * hb);
      out[g.index(i, j)] = (da + db) / g.jacobian(g.index(i, j));
    }
  }
  return out;
}

MeanPeriod mean_period(const CurrentField& current, double max_spread) {
  const AnnulusGrid& g = *current.grid;
  const auto& s = current.section_flux;
  MeanPeriod out;
  double sum = 0.0;
  for (double v : s) sum += v;
  out.mean_flux = sum / static_cast<double>(s.size());
  if (!(out.mean_flux > 0.0)) {
    throw NonOscillatoryError(fmt::format(
        "mean_period: angular flux {:.3g} is not positive", out.mean_flux));
  }
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  out.relative_spread = (*hi - *lo) / out.mean_flux;
  if (out.relative_spread > max_spread) {
    throw NonOscillatoryError(fmt::format(
        "mean_period: section fluxes vary by {:.3g} (limit {:.3g})",
        out.relative_spread, max_spread));
  }
  out.Tbar = 1.0 / out.mean_flux;

  double q = 0.0;
  for (int i = 0; i < g.n_alpha(); ++i) {
    for (int j = 0; j < g.n_beta(); ++j) {
      const double tr = (j == 0 || j == g.n_beta() - 1) ? 0.5 : 1.0;
      q += tr * g.h_beta() * current.j_alpha[g.index(i, j)];
    }
  }
  out.quadrature_flux = q / g.n_alpha();
  return out;
}

void write_operator_coo(const SparseOperator& op, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "row,col,value\n";
  for (int row = 0; row < op.matrix.outerSize(); ++row) {
    for (SparseOperator::Matrix::InnerIterator it(op.matrix, row); it; ++it) {
      out << row << ',' << it.col() << ',' << format_double(it.value()) << '\n';
    }
  }
}

}  // namespace stochphase
