#include "stochphase/mrt.hpp"

#include "stochphase/errors.hpp"

#include <Eigen/SparseLU>
#include <fmt/format.h>

#include <cmath>
#include <map>
#include <numbers>

namespace stochphase {

MrtSolution solve_mrt(const SparseOperator& backward, double Tbar,
                      const MrtOptions& options) {
  if (!(Tbar > 0.0) || !std::isfinite(Tbar))
    throw ParameterError(fmt::format("solve_mrt: T̄ must be positive, got {}", Tbar));
  const auto& grid_ptr = backward.grid;
  const AnnulusGrid& grid = *grid_ptr;
  const int n = grid.size();
  const Eigen::VectorXd& w = grid.weights();
  constexpr double two_pi = 2.0 * std::numbers::pi;

  const Eigen::VectorXd rhs_s =
      Eigen::VectorXd::Constant(n, -1.0) + (Tbar / two_pi) * apply_to_alpha(backward);

  // [L† 1; wᵀ 0][S; ν] = [rhs; 0]; ν equals ⟨P₀, rhs⟩.
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(backward.matrix.nonZeros() + 2 * n);
  for (int row = 0; row < backward.matrix.outerSize(); ++row)
    for (SparseOperator::Matrix::InnerIterator it(backward.matrix, row); it; ++it)
      t.emplace_back(row, static_cast<int>(it.col()), it.value());
  for (int k = 0; k < n; ++k) {
    t.emplace_back(k, n, 1.0);
    t.emplace_back(n, k, w[k]);
  }
  Eigen::SparseMatrix<double> M(n + 1, n + 1);
  M.setFromTriplets(t.begin(), t.end());
  M.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success)
    throw SingularSystemError("solve_mrt: bordered system is singular",
                              std::numeric_limits<double>::infinity());
  Eigen::VectorXd b(n + 1);
  b.head(n) = rhs_s;
  b[n] = 0.0;
  const Eigen::VectorXd sol = lu.solve(b);
  if (!sol.allFinite())
    throw SingularSystemError("solve_mrt: non-finite solution",
                              std::numeric_limits<double>::infinity());

  MrtSolution out;
  out.Tbar = Tbar;
  out.fredholm_residual = sol[n];
  if (std::abs(out.fredholm_residual) > options.compatibility_tolerance) {
    throw SingularSystemError(
        fmt::format("solve_mrt: periodic problem incompatible with T̄ = {} "
                    "(residual {:.3g}, tolerance {:.3g})",
                    Tbar, out.fredholm_residual, options.compatibility_tolerance),
        out.fredholm_residual);
  }
  Eigen::VectorXd S = sol.head(n);
  out.T.periodic = ScalarField(grid_ptr, S, "T", "time");
  out.T.slope = -Tbar / two_pi;

  out.reference_time = options.reference_time.value_or(out.T.at_node(grid.anchor_node()));
  out.theta.periodic = ScalarField(
      grid_ptr, (two_pi / Tbar) * (Eigen::VectorXd::Constant(n, out.reference_time) - S),
      "theta", "rad");
  out.theta.slope = 1.0;
  out.theta_wrapped = ScalarField(grid_ptr, out.theta.wrapped_values(), "theta", "rad");
  return out;
}

namespace {

/// Crossing point keyed by the grid edge it lies on.
struct EdgeKey {
  int i, j;
  bool along_alpha;
  auto operator<=>(const EdgeKey&) const = default;
};

}  // namespace

std::vector<Polyline> isochron_extract(const LiftedField& phase, double level) {
  const AnnulusGrid& g = *phase.periodic.grid;
  const int na = g.n_alpha(), nb = g.n_beta();
  constexpr double two_pi = 2.0 * std::numbers::pi;

  // Lifted value at (i, j) with i allowed to run past n_alpha.
  auto value = [&](int i, int j) {
    const int iw = g.wrap_alpha_index(i);
    return phase.at_node(g.index(iw, j)) + phase.slope * two_pi * ((i - iw) / na);
  };

  std::map<EdgeKey, Vec2> points;
  std::vector<std::pair<EdgeKey, EdgeKey>> segments;

  for (int j = 0; j + 1 < nb; ++j) {
    for (int i = 0; i < na; ++i) {
      const double v0 = value(i, j);
      const double d0 = wrap_pi(v0 - level);
      // corners counter-clockwise in (alpha, beta)
      const int ci[4] = {i, i + 1, i + 1, i};
      const int cj[4] = {j, j, j + 1, j + 1};
      double gv[4];
      for (int k = 0; k < 4; ++k) gv[k] = d0 + (value(ci[k], cj[k]) - v0);

      std::vector<EdgeKey> hits;
      for (int k = 0; k < 4; ++k) {
        const int k1 = (k + 1) % 4;
        if ((gv[k] < 0.0) == (gv[k1] < 0.0)) continue;
        const double s = gv[k] / (gv[k] - gv[k1]);
        const double a = g.alpha(0) + g.h_alpha() * (ci[k] + s * (ci[k1] - ci[k]));
        const double b = g.beta(cj[k]) + g.h_beta() * s * (cj[k1] - cj[k]);
        const bool along_alpha = cj[k] == cj[k1];
        const EdgeKey key{g.wrap_alpha_index(std::min(ci[k], ci[k1])),
                          std::min(cj[k], cj[k1]), along_alpha};
        points.emplace(key, g.to_physical(a, b));
        hits.push_back(key);
      }
      if (hits.size() == 2) {
        segments.emplace_back(hits[0], hits[1]);
      } else if (hits.size() == 4) {
        const double centre = 0.25 * (gv[0] + gv[1] + gv[2] + gv[3]);
        if ((centre < 0.0) == (gv[0] < 0.0)) {
          segments.emplace_back(hits[0], hits[1]);
          segments.emplace_back(hits[2], hits[3]);
        } else {
          segments.emplace_back(hits[3], hits[0]);
          segments.emplace_back(hits[1], hits[2]);
        }
      }
    }
  }
  if (segments.empty())
    throw DomainError(fmt::format("isochron_extract: no contour at level {}", level));

  std::multimap<EdgeKey, std::size_t> touching;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    touching.emplace(segments[s].first, s);
    touching.emplace(segments[s].second, s);
  }
  std::vector<bool> used(segments.size(), false);
  auto next_segment = [&](const EdgeKey& at) -> std::ptrdiff_t {
    auto [lo, hi] = touching.equal_range(at);
    for (auto it = lo; it != hi; ++it)
      if (!used[it->second]) return static_cast<std::ptrdiff_t>(it->second);
    return -1;
  };
  auto degree = [&](const EdgeKey& at) {
    auto [lo, hi] = touching.equal_range(at);
    return std::distance(lo, hi);
  };

  std::vector<Polyline> lines;
  // Open chains start at endpoints of degree one; closed loops afterwards.
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < segments.size(); ++s)
    if (degree(segments[s].first) == 1 || degree(segments[s].second) == 1)
      order.push_back(s);
  for (std::size_t s = 0; s < segments.size(); ++s) order.push_back(s);

  for (std::size_t s0 : order) {
    if (used[s0]) continue;
    EdgeKey start = segments[s0].first, cur = segments[s0].second;
    if (degree(start) != 1 && degree(cur) == 1) std::swap(start, cur);
    Polyline line;
    line.level = level;
    line.vertices.push_back(points.at(start));
    line.vertices.push_back(points.at(cur));
    used[s0] = true;
    for (std::ptrdiff_t s = next_segment(cur); s >= 0; s = next_segment(cur)) {
      used[s] = true;
      cur = segments[s].first == cur ? segments[s].second : segments[s].first;
      line.vertices.push_back(points.at(cur));
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

Vec2 point_on_isochron(const LiftedField& phase, double level, double r) {
  const AnnulusGrid& g = *phase.periodic.grid;
  if (r < g.spec().r_in || r > g.spec().r_out)
    throw ParameterError(fmt::format(
        "point_on_isochron: radius {} outside [{}, {}]", r, g.spec().r_in,
        g.spec().r_out));
  const double beta = (r - g.spec().r_in) / g.radial_scale() - 1.0;
  auto f = [&](double a) {
    return wrap_pi(phase.interpolate(g.to_physical(a, beta)) - level);
  };
  const int m = 8 * g.n_alpha();
  const double h = 2.0 * std::numbers::pi / m;
  double fa = f(0.0);
  for (int k = 1; k <= m; ++k) {
    double lo = (k - 1) * h, hi = k * h;
    const double fb = f(hi);
    if (fa < 0.0 && fb >= 0.0 && fb - fa < std::numbers::pi) {
      double flo = fa;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      return g.to_physical(0.5 * (lo + hi), beta);
    }
    fa = fb;
  }
  throw DomainError(fmt::format(
      "point_on_isochron: level {} not found at radius {}", level, r));
}

}  // namespace stochphase
