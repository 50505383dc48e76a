#include "stochphase/grid.hpp"

#include "stochphase/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace stochphase {

AnnulusGrid::AnnulusGrid(const GridSpec& spec) : spec_(spec) {
  if (!(spec.r_in > 0.0)) {
    throw ParameterError(fmt::format(
        "grid: r_in = {} must be > 0 to exclude the phaseless centre",
        spec.r_in));
  }
  if (!(spec.r_out > spec.r_in)) {
    throw ParameterError(fmt::format("grid: need r_in < r_out (got {}, {})",
                                     spec.r_in, spec.r_out));
  }
  if (spec.n_alpha < 8 || spec.n_beta < 4) {
    throw ParameterError(fmt::format(
        "grid: need n_alpha >= 8 and n_beta >= 4 (got {}, {})", spec.n_alpha,
        spec.n_beta));
  }
  h_alpha_ = 2.0 * std::numbers::pi / spec.n_alpha;
  h_beta_ = 2.0 / (spec.n_beta - 1);

  positions_.resize(size());
  weights_.resize(size());
  for (int j = 0; j < spec.n_beta; ++j) {
    const double trapezoid = (j == 0 || j == spec.n_beta - 1) ? 0.5 : 1.0;
    const double w = jacobian_at(beta(j)) * h_alpha_ * h_beta_ * trapezoid;
    for (int i = 0; i < spec.n_alpha; ++i) {
      positions_[index(i, j)] = to_physical(alpha(i), beta(j));
      weights_[index(i, j)] = w;
    }
  }
}

Vec2 AnnulusGrid::to_physical(double alpha, double beta) const noexcept {
  const double r = radius_at(beta);
  return spec_.center + r * Vec2(std::cos(alpha), std::sin(alpha));
}

AnnulusCoords AnnulusGrid::to_computational(const Vec2& x) const noexcept {
  const Vec2 d = x - spec_.center;
  const double r = d.norm();
  AnnulusCoords c;
  c.alpha = wrap_two_pi(std::atan2(d.y(), d.x()));
  c.beta = (r - spec_.r_in) / radial_scale() - 1.0;
  return c;
}

bool AnnulusGrid::contains(const Vec2& x, double slack) const noexcept {
  const double r = (x - spec_.center).norm();
  return r >= spec_.r_in - slack && r <= spec_.r_out + slack;
}

Eigen::VectorXd LiftedField::node_values() const {
  Eigen::VectorXd v(periodic.values.size());
  for (int n = 0; n < v.size(); ++n) v[n] = at_node(n);
  return v;
}

double LiftedField::interpolate(const Vec2& x) const {
  const AnnulusCoords c = periodic.grid->to_computational(x);
  return periodic.interpolate(x) + slope * c.alpha;
}

Eigen::VectorXd LiftedField::wrapped_values() const {
  Eigen::VectorXd v = node_values();
  for (auto& x : v) x = wrap_two_pi(x);
  return v;
}

std::vector<bool> mask_from_density(const ScalarField& density,
                                    double relative_threshold) {
  const double peak = density.values.maxCoeff();
  std::vector<bool> mask(density.values.size());
  for (int n = 0; n < density.values.size(); ++n) {
    mask[n] = density.values[n] >= relative_threshold * peak;
  }
  return mask;
}

}  // namespace stochphase
