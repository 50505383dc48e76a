#include "stochphase/grid.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace stochphase;
constexpr double kPi = std::numbers::pi;

TEST(Grid, WeightsSumToAnnulusArea) {
  const auto g = fixtures::grid(64, 33, 0.5, 2.0);
  EXPECT_NEAR(g->weights().sum(), kPi * (4.0 - 0.25), 1e-12);
}

TEST(Grid, CoordinateRoundTrip) {
  GridSpec s;
  s.center = Vec2(0.3, -0.1);
  s.r_in = 0.4;
  s.r_out = 1.6;
  const AnnulusGrid g(s);
  for (double a : {0.0, 1.0, 3.0, 6.2}) {
    for (double b : {-1.0, -0.3, 0.5, 1.0}) {
      const auto c = g.to_computational(g.to_physical(a, b));
      EXPECT_NEAR(c.alpha, a, 1e-13);
      EXPECT_NEAR(c.beta, b, 1e-13);
    }
  }
  EXPECT_NEAR(g.radius_at(-1.0), 0.4, 1e-15);
  EXPECT_NEAR(g.radius_at(1.0), 1.6, 1e-15);
  EXPECT_TRUE(g.contains(Vec2(1.3, -0.1)));
  EXPECT_FALSE(g.contains(Vec2(0.3, -0.1)));
}

TEST(Grid, IndexingAndAnchor) {
  const auto g = fixtures::grid(16, 9, 0.5, 1.5);
  EXPECT_EQ(g->index(3, 2), 2 * 16 + 3);
  EXPECT_EQ(g->indices(35), std::make_pair(3, 2));
  EXPECT_EQ(g->wrap_alpha_index(-1), 15);
  EXPECT_EQ(g->wrap_alpha_index(16), 0);
  EXPECT_NEAR(g->beta(g->indices(g->anchor_node()).second), 0.0, 1e-15);
  EXPECT_FALSE(g->is_interior(g->index(0, 0)));
  EXPECT_FALSE(g->is_interior(g->index(0, 8)));
  EXPECT_TRUE(g->is_interior(g->index(0, 1)));
  EXPECT_FALSE(g->is_interior(g->index(0, 1), 2));
}

TEST(Grid, InterpolationIsExactForBilinearData) {
  const auto g = fixtures::grid(32, 17, 0.5, 1.5);
  Eigen::VectorXd v(g->size());
  for (int k = 0; k < g->size(); ++k) {
    const auto [i, j] = g->indices(k);
    v[k] = 2.0 + 3.0 * g->beta(j) + std::cos(g->alpha(i));
  }
  const double a = 5.0 * g->h_alpha(), b = 0.37;
  EXPECT_NEAR(g->interpolate(v, g->to_physical(a, b)), 2.0 + 3.0 * b + std::cos(a), 1e-13);
}

TEST(Grid, LiftedFieldSlopeAndWrapping) {
  const auto g = fixtures::grid(16, 5, 0.5, 1.5);
  LiftedField f{ScalarField(g, Eigen::VectorXd::Zero(g->size())), 1.0};
  EXPECT_NEAR(f.at_node(g->index(4, 2)), g->alpha(4), 1e-15);
  const Vec2 x = g->to_physical(2.0 * kPi - 0.05, 0.0);
  EXPECT_NEAR(f.interpolate(x), 2.0 * kPi - 0.05, 1e-12);
  f.periodic.values.setConstant(7.0);
  const auto w = f.wrapped_values();
  EXPECT_GE(w.minCoeff(), 0.0);
  EXPECT_LT(w.maxCoeff(), 2.0 * kPi);
}

TEST(Grid, AngleWrapping) {
  EXPECT_NEAR(wrap_pi(3.0 * kPi), kPi, 1e-15);
  EXPECT_NEAR(wrap_pi(-kPi), kPi, 1e-15);
  EXPECT_NEAR(wrap_pi(0.5), 0.5, 1e-16);
  EXPECT_NEAR(wrap_two_pi(-0.5), 2.0 * kPi - 0.5, 1e-15);
  EXPECT_EQ(wrap_two_pi(0.0), 0.0);
}

TEST(Grid, DensityMask) {
  const auto g = fixtures::grid(8, 5, 0.5, 1.5);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(g->size());
  v[3] = 1e-9;
  const auto mask = mask_from_density(ScalarField(g, v), 1e-6);
  EXPECT_FALSE(mask[3]);
  EXPECT_TRUE(mask[4]);
}
