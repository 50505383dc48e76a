#include "stochphase/models.hpp"

#include "stochphase/errors.hpp"

#include <Eigen/LU>
#include <fmt/format.h>

#include <cmath>
#include <utility>

namespace stochphase {

OscillatorModel::OscillatorModel(std::string name, DriftFn drift,
                                 NoiseFn noise, int noise_dim,
                                 std::map<std::string, double> params,
                                 DiffusionFn diffusion, JacobianFn jacobian)
    : name_(std::move(name)),
      drift_(std::move(drift)),
      noise_(std::move(noise)),
      noise_dim_(noise_dim),
      params_(std::move(params)),
      diffusion_(std::move(diffusion)),
      jacobian_(std::move(jacobian)) {
  if (!drift_ || !noise_) {
    throw std::invalid_argument("OscillatorModel: drift and noise required");
  }
  if (noise_dim_ < 1) {
    throw std::invalid_argument("OscillatorModel: noise dimension must be >= 1");
  }
  if (!diffusion_) {
    diffusion_ = [noise = noise_](const Vec2& x) -> Mat2 {
      const NoiseMatrix g = noise(x);
      return 0.5 * g * g.transpose();
    };
  }
}

OscillatorModel OscillatorModel::with_constant_noise(
    std::string name, DriftFn drift, const NoiseMatrix& g,
    std::map<std::string, double> params, JacobianFn jacobian) {
  const Mat2 D = 0.5 * g * g.transpose();
  return OscillatorModel(
      std::move(name), std::move(drift), [g](const Vec2&) { return g; },
      static_cast<int>(g.cols()), std::move(params),
      [D](const Vec2&) { return D; }, std::move(jacobian));
}

Mat2 OscillatorModel::drift_jacobian(const Vec2& x) const {
  if (jacobian_) return jacobian_(x);
  Mat2 J;
  for (int k = 0; k < 2; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
    Vec2 xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    J.col(k) = (drift_(xp) - drift_(xm)) / (2.0 * h);
  }
  return J;
}

double OscillatorModel::param(const std::string& key) const {
  const auto it = params_.find(key);
  if (it == params_.end()) {
    throw std::out_of_range(
        fmt::format("model '{}' has no parameter '{}'", name_, key));
  }
  return it->second;
}

OscillatorModel OscillatorModel::deterministic() const {
  auto params = params_;
  if (params.count("sigma")) params["sigma"] = 0.0;
  return with_constant_noise(name_, drift_, NoiseMatrix::Zero(2, noise_dim_),
                             std::move(params), jacobian_);
}

OscillatorModel OscillatorModel::with_drift(std::string name,
                                            DriftFn drift) const {
  return OscillatorModel(std::move(name), std::move(drift), noise_,
                         noise_dim_, params_, diffusion_);
}

namespace {

OscillatorModel stuart_landau_model(double a, double b, double sigma) {
  auto drift = [a, b](const Vec2& x) -> Vec2 {
    const double r2 = x.squaredNorm();
    return {a * x[0] - b * x[1] - r2 * x[0], b * x[0] + a * x[1] - r2 * x[1]};
  };
  auto jacobian = [a, b](const Vec2& x) -> Mat2 {
    const double r2 = x.squaredNorm();
    Mat2 J;
    J << a - r2 - 2.0 * x[0] * x[0], -b - 2.0 * x[0] * x[1],
        b - 2.0 * x[0] * x[1], a - r2 - 2.0 * x[1] * x[1];
    return J;
  };
  const NoiseMatrix g = sigma * Mat2::Identity();
  return OscillatorModel::with_constant_noise(
      "stuart_landau", drift, g, {{"a", a}, {"b", b}, {"sigma", sigma}},
      jacobian);
}

}  // namespace

OscillatorModel make_stuart_landau(const StuartLandauParams& p) {
  if (!(p.a > 0.0)) {
    throw ParameterError(fmt::format(
        "stuart_landau: a = {} is not in the oscillatory regime a > 0", p.a));
  }
  if (!(p.sigma >= 0.0)) {
    throw ParameterError(
        fmt::format("stuart_landau: sigma = {} must be >= 0", p.sigma));
  }
  if (!std::isfinite(p.b)) throw ParameterError("stuart_landau: b not finite");
  return stuart_landau_model(p.a, p.b, p.sigma);
}

OscillatorModel make_stuart_landau_unchecked(double a, double b,
                                             double sigma) {
  return stuart_landau_model(a, b, sigma);
}

OscillatorModel make_linear_focus(const LinearFocusParams& p) {
  if (!p.A.allFinite()) throw ParameterError("linear_focus: A not finite");
  if (!(p.sigma >= 0.0)) {
    throw ParameterError(
        fmt::format("linear_focus: sigma = {} must be >= 0", p.sigma));
  }
  const double tr = p.A.trace();
  const double det = p.A.determinant();
  const double disc = tr * tr - 4.0 * det;
  if (!(disc < 0.0)) {
    throw ParameterError(
        "linear_focus: A must have a complex-conjugate eigenvalue pair");
  }
  if (!(tr < 0.0)) {
    throw ParameterError("linear_focus: eigenvalues of A must have Re < 0");
  }
  const Mat2 A = p.A;
  const NoiseMatrix g = p.sigma * Mat2::Identity();
  return OscillatorModel::with_constant_noise(
      "linear_focus", [A](const Vec2& x) -> Vec2 { return A * x; }, g,
      {{"A00", A(0, 0)},
       {"A01", A(0, 1)},
       {"A10", A(1, 0)},
       {"A11", A(1, 1)},
       {"sigma", p.sigma}},
      [A](const Vec2&) { return A; });
}

OscillatorModel make_model(const ModelConfig& config) {
  return std::visit(
      [](const auto& p) -> OscillatorModel {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, StuartLandauParams>) {
          return make_stuart_landau(p);
        } else {
          return make_linear_focus(p);
        }
      },
      config);
}

double eval_generator_symbolic(const OscillatorModel& model,
                               const TestFunction& u, const Vec2& x) {
  const TestFunctionJet jet = u(x);
  const Mat2 D = model.diffusion_tensor(x);
  return jet.gradient.dot(model.drift(x)) + (D.cwiseProduct(jet.hessian)).sum();
}

}  // namespace stochphase
