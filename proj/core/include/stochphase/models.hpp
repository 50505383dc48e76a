#pragma once

#include <Eigen/Core>

#include <functional>
#include <map>
#include <string>
#include <variant>

namespace stochphase {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using NoiseMatrix = Eigen::Matrix<double, 2, Eigen::Dynamic>;

struct StuartLandauParams {
  double a = 1.0;
  double b = 1.0;
  double sigma = 0.0;
};

struct LinearFocusParams {
  Mat2 A = (Mat2() << -1.0, -2.0, 2.0, -1.0).finished();
  double sigma = 0.0;
};

/// Serializable model selection; see config.hpp for the JSON form.
using ModelConfig = std::variant<StuartLandauParams, LinearFocusParams>;

/// Planar diffusion dx = f(x) dt + g(x) dW with W an m-dimensional Wiener
/// process. Immutable after construction; evaluation is thread-safe as long as
/// the supplied callables are.
class OscillatorModel {
 public:
  using DriftFn = std::function<Vec2(const Vec2&)>;
  using NoiseFn = std::function<NoiseMatrix(const Vec2&)>;
  using DiffusionFn = std::function<Mat2(const Vec2&)>;
  using JacobianFn = std::function<Mat2(const Vec2&)>;

  /// If `diffusion` is empty, D = ½ g gᵀ is derived from `noise`. If
  /// `jacobian` is empty, drift_jacobian falls back to central differences.
  OscillatorModel(std::string name, DriftFn drift, NoiseFn noise,
                  int noise_dim, std::map<std::string, double> params = {},
                  DiffusionFn diffusion = {}, JacobianFn jacobian = {});

  /// Constant-noise convenience constructor (g independent of x).
  static OscillatorModel with_constant_noise(
      std::string name, DriftFn drift, const NoiseMatrix& g,
      std::map<std::string, double> params = {}, JacobianFn jacobian = {});

  Vec2 drift(const Vec2& x) const { return drift_(x); }
  NoiseMatrix noise(const Vec2& x) const { return noise_(x); }
  Mat2 diffusion_tensor(const Vec2& x) const { return diffusion_(x); }
  Mat2 drift_jacobian(const Vec2& x) const;

  int dimension() const noexcept { return 2; }
  int noise_dim() const noexcept { return noise_dim_; }
  const std::string& name() const noexcept { return name_; }
  const std::map<std::string, double>& params() const noexcept {
    return params_;
  }
  double param(const std::string& key) const;
  bool has_analytic_jacobian() const noexcept {
    return static_cast<bool>(jacobian_);
  }

  /// Same model with the noise switched off; keeps name and parameters.
  OscillatorModel deterministic() const;

  /// Copy with a different drift; noise, diffusion and parameters unchanged.
  OscillatorModel with_drift(std::string name, DriftFn drift) const;

 private:
  std::string name_;
  DriftFn drift_;
  NoiseFn noise_;
  int noise_dim_;
  std::map<std::string, double> params_;
  DiffusionFn diffusion_;
  JacobianFn jacobian_;
};

/// Noisy Stuart-Landau normal form in real coordinates,
///   f(x,y) = (a x - b y - r² x, b x + a y - r² y),  g = sigma I.
/// Throws ParameterError for a <= 0 or sigma < 0.
OscillatorModel make_stuart_landau(const StuartLandauParams& params);

/// Same drift without the a > 0 restriction and with no noise; for
/// experiments below the Hopf point.
OscillatorModel make_stuart_landau_unchecked(double a, double b,
                                             double sigma = 0.0);

/// f(x) = A x, g = sigma I. Requires a complex-conjugate spectrum with
/// negative real part.
OscillatorModel make_linear_focus(const LinearFocusParams& params);

OscillatorModel make_model(const ModelConfig& config);

/// Value, gradient and Hessian of a test function at one point.
struct TestFunctionJet {
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
  Mat2 hessian = Mat2::Zero();
};

using TestFunction = std::function<TestFunctionJet(const Vec2&)>;

/// Backward generator applied analytically: ∇u·f + Σ D_ij ∂_ij u.
double eval_generator_symbolic(const OscillatorModel& model,
                               const TestFunction& u, const Vec2& x);

}  // namespace stochphase
