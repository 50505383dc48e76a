#include "stochphase/errors.hpp"
#include "stochphase/simulate.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

using namespace stochphase;
constexpr double kPi = std::numbers::pi;

TEST(Simulate, OutputIndependentOfThreadCount) {
  const auto m = make_stuart_landau({1.0, 1.0, 0.5});
  SimConfig c;
  c.dt = 1e-3;
  c.n_steps = 2000;
  c.n_samples = 7;
  c.seed = 42;
  c.record_every = 10;
  c.threads = 1;
  const auto a = euler_maruyama(m, c);
  c.threads = 3;
  const auto b = euler_maruyama(m, c);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.times, b.times);
  EXPECT_EQ(a.n_records, 201);
  c.seed = 43;
  EXPECT_NE(euler_maruyama(m, c).states, a.states);
}

TEST(Simulate, StreamsAreDistinct) {
  auto e0 = stream_engine(1, 0), e1 = stream_engine(1, 1), f0 = stream_engine(2, 0);
  const auto x0 = e0(), x1 = e1(), y0 = f0();
  EXPECT_NE(x0, x1);
  EXPECT_NE(x0, y0);
  auto again = stream_engine(1, 0);
  EXPECT_EQ(again(), x0);
}

TEST(Simulate, RecordLayout) {
  const auto m = make_stuart_landau({1.0, 1.0, 0.0});
  SimConfig c;
  c.dt = 0.01;
  c.n_steps = 100;
  c.record_every = 5;
  c.record_start = 50;
  const auto e = euler_maruyama(m, c);
  ASSERT_EQ(e.n_records, 11);
  EXPECT_NEAR(e.times.front(), 0.5, 1e-12);
  EXPECT_NEAR(e.times.back(), 1.0, 1e-12);
  EXPECT_NEAR(e.record_spacing(), 0.05, 1e-15);
}

TEST(Simulate, NoiselessLinearFlowConvergesToMatrixExponential) {
  const auto p = fixtures::focus(-1.0, -4.0, 1.0, -1.0, 0.0);
  const auto m = make_linear_focus(p);
  const Vec2 x0(1.0, 0.5);
  const Vec2 exact = (p.A * 1.0).exp() * x0;
  double err[2];
  for (int r = 0; r < 2; ++r) {
    SimConfig c;
    c.dt = r == 0 ? 1e-3 : 5e-4;
    c.n_steps = r == 0 ? 1000 : 2000;
    c.initial = x0;
    const auto e = euler_maruyama(m, c);
    err[r] = (e.state(0, e.n_records - 1) - exact).norm();
  }
  EXPECT_LT(err[0], 5e-3);
  EXPECT_NEAR(err[0] / err[1], 2.0, 0.1);  // first order
}

TEST(Simulate, OrnsteinUhlenbeckStationaryVariance) {
  // A = -I, σ: stationary covariance σ²/2 I.
  const auto m = make_linear_focus(fixtures::focus(-1.0, -1.0, 1.0, -1.0, 0.8));
  SimConfig c;
  c.dt = 1e-3;
  c.n_steps = 8000;
  c.n_samples = 4000;
  c.seed = 5;
  c.record_every = 8000;
  const auto e = euler_maruyama(m, c);
  double s2 = 0.0;
  for (int k = 0; k < e.n_samples; ++k) s2 += e.state(k, 1).squaredNorm();
  s2 /= 2.0 * e.n_samples;
  const double exact = 0.32 * (1.0 - std::exp(-16.0));
  EXPECT_NEAR(s2, exact, 4.0 * exact * std::sqrt(2.0 / (2.0 * e.n_samples)));
}

TEST(Simulate, UniformAnnulusInitialCondition) {
  const auto m = make_stuart_landau({1.0, 1.0, 0.0});
  SimConfig c;
  c.n_steps = 1;
  c.n_samples = 20000;
  c.initial = UniformAnnulusSampler{Vec2::Zero(), 1.0, 2.0};
  const auto e = euler_maruyama(m, c);
  double inner = 0.0;
  for (int k = 0; k < e.n_samples; ++k) {
    const double r = e.state(k, 0).norm();
    ASSERT_GE(r, 1.0 - 1e-12);
    ASSERT_LE(r, 2.0 + 1e-12);
    inner += r < 1.5;
  }
  // Area fraction of 1 <= r < 1.5 in 1 <= r <= 2.
  EXPECT_NEAR(inner / e.n_samples, 1.25 / 3.0, 0.02);
}

TEST(Simulate, ReflectionMirrorsRadius) {
  const AnnulusReflection r{Vec2(1.0, 0.0), 0.5, 2.0};
  const Vec2 in = reflect_into_annulus(Vec2(1.3, 0.0), r);
  EXPECT_NEAR((in - Vec2(1.0, 0.0)).norm(), 0.7, 1e-14);
  const Vec2 out = reflect_into_annulus(Vec2(1.0, 2.4), r);
  EXPECT_NEAR((out - Vec2(1.0, 0.0)).norm(), 1.6, 1e-14);
  EXPECT_NEAR(out.x(), 1.0, 1e-14);
}

TEST(Simulate, ReflectedPathsStayInAnnulus) {
  const auto m = make_stuart_landau({1.0, 1.0, 1.5});
  SimConfig c;
  c.dt = 1e-3;
  c.n_steps = 5000;
  c.n_samples = 8;
  c.reflection = AnnulusReflection{Vec2::Zero(), 0.6, 1.4};
  const auto e = euler_maruyama(m, c);
  for (int s = 0; s < e.n_samples; ++s)
    for (int k = 0; k < e.n_records; ++k) {
      const double r = e.state(s, k).norm();
      ASSERT_GE(r, 0.6 - 1e-12);
      ASSERT_LE(r, 1.4 + 1e-12);
    }
}

TEST(Simulate, BlowUpIsReported) {
  const auto m = make_stuart_landau_unchecked(1.0, 1.0);
  SimConfig c;
  c.dt = 1.0;
  c.n_steps = 50;
  c.initial = Vec2(3.0, 0.0);
  EXPECT_THROW(euler_maruyama(m, c), DivergenceError);
}

TEST(Simulate, ConfigValidation) {
  SimConfig c;
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.n_samples = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.record_every = 0;
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(Simulate, NoiselessReturnTimeIsPeriod) {
  const auto m = make_stuart_landau({1.0, 2.0, 0.0});
  SimConfig c;
  c.dt = 1e-3;
  c.n_steps = 20000;
  c.n_samples = 3;
  const auto st = first_return_times(m, c, polar_angle_section(Vec2::Zero()),
                                     {Vec2(1.0, 0.0), Vec2(0.0, 0.5)});
  ASSERT_EQ(st.size(), 2u);
  for (const auto& s : st) {
    EXPECT_EQ(s.n, 3);
    EXPECT_NEAR(s.mean, kPi, 1e-3);
    EXPECT_NEAR(s.std_error, 0.0, 1e-12);
  }
}

TEST(Simulate, ReturnTimeTimeout) {
  const auto m = make_stuart_landau({1.0, 1.0, 0.1});
  SimConfig c;
  c.dt = 1e-3;
  c.n_steps = 100;
  EXPECT_THROW(first_return_times(m, c, polar_angle_section(Vec2::Zero()), {Vec2(1.0, 0.0)}),
               TimeoutError);
}
