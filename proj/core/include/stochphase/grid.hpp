#pragma once

#include "stochphase/models.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace stochphase {

struct GridSpec {
  int n_alpha = 128;
  int n_beta = 64;
  double r_in = 0.2;
  double r_out = 2.5;
  Vec2 center = Vec2::Zero();
};

/// Computational coordinates of a point: alpha in [0, 2π), beta in [-1, 1]
/// (beta may leave that range for points outside the annulus).
struct AnnulusCoords {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Tensor grid on the annulus r_in <= |x - c| <= r_out. Alpha nodes are
/// uniform and periodic, beta nodes include both boundary circles, and the
/// radius is affine in beta. Node index is j * n_alpha + i.
class AnnulusGrid {
 public:
  explicit AnnulusGrid(const GridSpec& spec);

  static std::shared_ptr<const AnnulusGrid> make(const GridSpec& spec) {
    return std::make_shared<const AnnulusGrid>(spec);
  }

  const GridSpec& spec() const noexcept { return spec_; }
  int n_alpha() const noexcept { return spec_.n_alpha; }
  int n_beta() const noexcept { return spec_.n_beta; }
  int size() const noexcept { return spec_.n_alpha * spec_.n_beta; }
  int index(int i, int j) const noexcept { return j * spec_.n_alpha + i; }
  int wrap_alpha_index(int i) const noexcept {
    const int n = spec_.n_alpha;
    return ((i % n) + n) % n;
  }
  std::pair<int, int> indices(int node) const noexcept {
    return {node % spec_.n_alpha, node / spec_.n_alpha};
  }

  double h_alpha() const noexcept { return h_alpha_; }
  double h_beta() const noexcept { return h_beta_; }
  /// dr/dbeta.
  double radial_scale() const noexcept {
    return 0.5 * (spec_.r_out - spec_.r_in);
  }
  double alpha(int i) const noexcept { return h_alpha_ * i; }
  double beta(int j) const noexcept { return -1.0 + h_beta_ * j; }
  double radius_at(double beta) const noexcept {
    return spec_.r_in + (beta + 1.0) * radial_scale();
  }
  double radius(int j) const noexcept { return radius_at(beta(j)); }
  const Vec2& center() const noexcept { return spec_.center; }

  /// (alpha, beta) -> (x, y).
  Vec2 to_physical(double alpha, double beta) const noexcept;
  Vec2 position(int node) const noexcept { return positions_[node]; }
  Vec2 position(int i, int j) const noexcept {
    return positions_[index(i, j)];
  }
  /// (x, y) -> (alpha, beta); alpha wrapped into [0, 2π).
  AnnulusCoords to_computational(const Vec2& x) const noexcept;

  /// |det ∂(x,y)/∂(alpha,beta)| = r(beta) * dr/dbeta.
  double jacobian_at(double beta) const noexcept {
    return radius_at(beta) * radial_scale();
  }
  double jacobian(int node) const noexcept {
    return jacobian_at(beta(node / spec_.n_alpha));
  }
  /// Trapezoid (beta) times uniform periodic (alpha) quadrature weights,
  /// including the Jacobian: sum of weights equals the annulus area.
  const Eigen::VectorXd& weights() const noexcept { return weights_; }

  bool contains(const Vec2& x, double slack = 0.0) const noexcept;

  /// Node closest to (alpha = 0, beta = 0); anchors phase conventions.
  int anchor_node() const noexcept { return index(0, spec_.n_beta / 2); }

  /// Interior in the beta direction: not on either boundary circle.
  bool is_interior(int node, int margin = 1) const noexcept {
    const int j = node / spec_.n_alpha;
    return j >= margin && j < spec_.n_beta - margin;
  }

  /// Bilinear interpolation with periodic alpha and beta clamped to the
  /// annulus. `values` holds one entry per node.
  template <class Scalar>
  Scalar interpolate(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& values,
                     const Vec2& x) const;

 private:
  GridSpec spec_;
  double h_alpha_;
  double h_beta_;
  std::vector<Vec2> positions_;
  Eigen::VectorXd weights_;
};

/// Per-node field on an annulus grid.
template <class Scalar>
struct BasicField {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::shared_ptr<const AnnulusGrid> grid;
  Vector values;
  std::string name;
  std::string units;

  BasicField() = default;
  BasicField(std::shared_ptr<const AnnulusGrid> g, Vector v,
             std::string field_name = {}, std::string field_units = {})
      : grid(std::move(g)),
        values(std::move(v)),
        name(std::move(field_name)),
        units(std::move(field_units)) {}

  Scalar operator[](int node) const { return values[node]; }
  Scalar interpolate(const Vec2& x) const {
    return grid->interpolate(values, x);
  }
};

using ScalarField = BasicField<double>;
using ComplexField = BasicField<std::complex<double>>;

/// A multivalued angle-like field represented as periodic + slope * alpha.
/// T uses slope -T̄/2π, the MRT phase slope +1, the asymptotic phase ±1.
struct LiftedField {
  ScalarField periodic;
  double slope = 0.0;

  double at_node(int node) const {
    const auto [i, j] = periodic.grid->indices(node);
    return periodic.values[node] + slope * periodic.grid->alpha(i);
  }
  /// Values on nodes with alpha in [0, 2π) (discontinuous at the seam).
  Eigen::VectorXd node_values() const;
  /// Value at x using the interpolated periodic part plus slope * alpha(x).
  double interpolate(const Vec2& x) const;
  /// Node values reduced into [0, 2π).
  Eigen::VectorXd wrapped_values() const;
};

/// Wraps an angle into (-π, π].
inline double wrap_pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(angle, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

/// Wraps an angle into [0, 2π).
inline double wrap_two_pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(angle, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r -= two_pi;
  return r;
}

/// Density-based node mask: true where the field is at least
/// `relative_threshold` times its maximum.
std::vector<bool> mask_from_density(const ScalarField& density,
                                    double relative_threshold);

// --- template implementation ---

template <class Scalar>
Scalar AnnulusGrid::interpolate(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& values,
    const Vec2& x) const {
  const AnnulusCoords c = to_computational(x);
  const double s = c.alpha / h_alpha_;
  int i0 = static_cast<int>(std::floor(s));
  const double ta = s - i0;
  i0 = wrap_alpha_index(i0);
  const int i1 = wrap_alpha_index(i0 + 1);

  const double beta = std::clamp(c.beta, -1.0, 1.0);
  double t = (beta + 1.0) / h_beta_;
  int j0 = static_cast<int>(std::floor(t));
  if (j0 >= spec_.n_beta - 1) j0 = spec_.n_beta - 2;
  if (j0 < 0) j0 = 0;
  const double tb = t - j0;
  const int j1 = j0 + 1;

  const Scalar v00 = values[index(i0, j0)];
  const Scalar v10 = values[index(i1, j0)];
  const Scalar v01 = values[index(i0, j1)];
  const Scalar v11 = values[index(i1, j1)];
  return (1.0 - tb) * ((1.0 - ta) * v00 + ta * v10) +
         tb * ((1.0 - ta) * v01 + ta * v11);
}

}  // namespace stochphase
