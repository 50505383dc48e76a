#include "stochphase/deterministic.hpp"
#include "stochphase/errors.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace stochphase;
constexpr double kPi = std::numbers::pi;

namespace {

double prc_error(double a, double b) {
  const auto m = make_stuart_landau({a, b, 0.0});
  const auto cyc = find_limit_cycle(m, Vec2(std::sqrt(a), 0.0));
  const auto adj = adjoint_prc(cyc, m);
  double err = 0.0;
  for (std::size_t k = 0; k < adj.times.size(); ++k) {
    const double t = adj.times[k];
    const Vec2 exact = Vec2(-std::sin(b * t), std::cos(b * t)) / std::sqrt(a);
    err = std::max(err, (adj.Z[k] - exact).cwiseAbs().maxCoeff());
  }
  return err;
}

}  // namespace

TEST(Deterministic, StuartLandauCycle) {
  const auto m = make_stuart_landau({2.0, 1.5, 0.0});
  const auto c = find_limit_cycle(m, Vec2(1.0, 0.3));
  EXPECT_NEAR(c.period, 2.0 * kPi / 1.5, 1e-9);
  EXPECT_LT(c.closure_error, 1e-8);
  for (const Vec2& x : c.states) EXPECT_NEAR(x.norm(), std::sqrt(2.0), 1e-8);
  EXPECT_EQ(c.times.size(), c.states.size());
  EXPECT_NEAR(c.times.back(), c.period, 1e-12);
}

TEST(Deterministic, AdjointPrcMatchesAnalytic) {
  EXPECT_LT(prc_error(1.0, 1.0), 1e-3);
  EXPECT_LT(prc_error(4.0, 1.0), 1e-3);
  EXPECT_LT(prc_error(1.0, 2.5), 1e-3);
}

TEST(Deterministic, NormalizationConventions) {
  const auto m = make_stuart_landau({1.0, 2.0, 0.0});
  const auto c = find_limit_cycle(m, Vec2(1.0, 0.0));
  const auto ang = adjoint_prc(c, m);
  AdjointOptions o;
  o.normalization = PhaseNormalization::kTime;
  const auto tim = adjoint_prc(c, m, o);
  for (std::size_t k = 0; k < c.states.size(); k += 97) {
    const Vec2 F = m.drift(c.states[k]);
    EXPECT_NEAR(ang.Z[k].dot(F), 2.0 * kPi / c.period, 1e-8);
    EXPECT_NEAR(tim.Z[k].dot(F), 1.0, 1e-8);
  }
  EXPECT_LT(ang.normalization_residual, 1e-8);
  EXPECT_LT(ang.periodicity_error, 1e-8);
}

TEST(Deterministic, MalkinAverageOfAzimuthalPush) {
  const Perturbation push = [](const Vec2& x, double) -> Vec2 { return Vec2(-x.y(), x.x()) / x.norm(); };
  for (double a : {1.0, 4.0}) {
    const auto m = make_stuart_landau({a, 1.0, 0.0});
    const auto c = find_limit_cycle(m, Vec2(std::sqrt(a), 0.0));
    EXPECT_NEAR(malkin_average(c, adjoint_prc(c, m), push), 1.0 / std::sqrt(a), 1e-6);
  }
}

TEST(Deterministic, VanDerPolPeriod) {
  const double mu = 1.0;
  const auto vdp = OscillatorModel::with_constant_noise(
      "van_der_pol",
      [mu](const Vec2& x) {
        return Vec2(x.y(), mu * (1.0 - x.x() * x.x()) * x.y() - x.x());
      },
      NoiseMatrix::Zero(2, 1));
  const auto c = find_limit_cycle(vdp, Vec2(2.0, 0.0));
  EXPECT_NEAR(c.period, 6.663286859323130, 1e-7);
  const auto adj = adjoint_prc(c, vdp);
  EXPECT_LT(adj.normalization_residual, 1e-6);
  EXPECT_LT(adj.periodicity_error, 1e-6);
}

TEST(Deterministic, FocusHasNoCycle) {
  const auto m = make_linear_focus(fixtures::focus(-1.0, -2.0, 2.0, -1.0, 0.0));
  EXPECT_THROW(find_limit_cycle(m, Vec2(1.0, 0.0)), NonOscillatoryError);
}
