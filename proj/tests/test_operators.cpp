#include "stochphase/models.hpp"
#include "stochphase/operators.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace stochphase;

namespace {

double max_row_sum(const SparseOperator& op) {
  const Eigen::VectorXd s = op.matrix * Eigen::VectorXd::Ones(op.matrix.cols());
  return s.cwiseAbs().maxCoeff();
}

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Smooth test function with its jet.
TestFunctionJet poly(const Vec2& x) {
  TestFunctionJet j;
  const double s = std::sin(x.x()), c = std::cos(x.x());
  j.value = x.x() * x.x() + 3.0 * x.x() * x.y() - x.y() * x.y() * x.y() + s;
  j.gradient = Vec2(2.0 * x.x() + 3.0 * x.y() + c, 3.0 * x.x() - 3.0 * x.y() * x.y());
  j.hessian << 2.0 - s, 3.0, 3.0, -6.0 * x.y();
  return j;
}

double consistency_error(const OscillatorModel& m, int na, int nb) {
  // Interior rows only; boundary rows carry the reflecting condition.
  const auto g = fixtures::grid(na, nb, 0.4, 1.8);
  const auto op = assemble_backward(m, g);
  Eigen::VectorXd u(g->size());
  for (int k = 0; k < g->size(); ++k) u[k] = poly(g->position(k)).value;
  const Eigen::VectorXd lu = op.apply(u);
  double err = 0.0;
  for (int k = 0; k < g->size(); ++k) {
    if (!g->is_interior(k, 1)) continue;
    err = std::max(err, std::abs(lu[k] - eval_generator_symbolic(m, poly, g->position(k))));
  }
  return err;
}

}  // namespace

TEST(Operators, BackwardRowsSumToZero) {
  const auto g = fixtures::grid(48, 24, 0.3, 2.0);
  for (const auto& m : {make_stuart_landau({1.0, 1.0, 0.3}),
                        make_linear_focus(fixtures::focus(-1.0, -4.0, 1.0, -1.0, 1.0))}) {
    const auto op = assemble_backward(m, g);
    const double scale = Eigen::Map<const Eigen::VectorXd>(op.matrix.valuePtr(), op.matrix.nonZeros()).cwiseAbs().maxCoeff();
    EXPECT_LT(max_row_sum(op), 1e-13 * scale) << m.name();
  }
}

TEST(Operators, ForwardConservesQuadratureMass) {
  const auto g = fixtures::grid(40, 20, 0.3, 2.0);
  const auto m = make_linear_focus(fixtures::focus(-1.0, -4.0, 1.0, -1.0, 1.0));
  const auto fwd = assemble_forward(m, g);
  EXPECT_EQ(fwd.kind, OperatorKind::kForward);
  const Eigen::VectorXd p = random_vector(g->size(), 1);
  const double dm = g->weights().dot(fwd.apply(p));
  EXPECT_LT(std::abs(dm), 1e-11 * fwd.apply(p).cwiseAbs().maxCoeff());
}

TEST(Operators, ForwardIsQuadratureAdjointOfBackward) {
  const auto g = fixtures::grid(32, 16, 0.5, 1.6);
  const auto m = make_stuart_landau({1.0, 2.0, 0.4});
  const auto bwd = assemble_backward(m, g);
  const auto fwd = forward_from_backward(bwd);
  const Eigen::VectorXd p = random_vector(g->size(), 2);
  const Eigen::VectorXd v = random_vector(g->size(), 3);
  const Eigen::VectorXd& w = g->weights();
  const double lhs = (w.array() * fwd.apply(p).array() * v.array()).sum();
  const double rhs = (w.array() * p.array() * bwd.apply(v).array()).sum();
  EXPECT_NEAR(lhs, rhs, 1e-11 * std::abs(lhs));
}

TEST(Operators, SecondOrderConsistencyWithSymbolicGenerator) {
  const auto m = make_linear_focus(fixtures::focus(-1.0, -2.0, 2.0, -1.0, 0.7));
  const double e1 = consistency_error(m, 64, 32);
  const double e2 = consistency_error(m, 128, 63);
  EXPECT_GT(e1 / e2, 3.0);
  EXPECT_LT(e1 / e2, 5.0);
}

TEST(Operators, StrideOneStencilReproducesMatrix) {
  const auto g = fixtures::grid(40, 20, 0.5, 1.5);
  const auto m = make_stuart_landau({1.0, 1.0, 0.3});
  const auto op = assemble_backward(m, g);
  Eigen::VectorXd u(g->size());
  for (int k = 0; k < g->size(); ++k) u[k] = poly(g->position(k)).value;
  const LiftedField f{ScalarField(g, u), 0.0};
  const Eigen::VectorXd a = op.apply(u);
  const Eigen::VectorXd s = apply_backward_stencil(m, *g, f, 1);
  for (int k = 0; k < g->size(); ++k) {
    if (g->is_interior(k, 1)) {
      EXPECT_NEAR(a[k], s[k], 1e-10 * (1.0 + std::abs(a[k])));
    } else {
      EXPECT_TRUE(std::isnan(s[k]));
    }
  }
}

TEST(Operators, GeneratorOfAngleIsRotationRateForIsotropicOscillator) {
  const auto g = fixtures::grid(64, 20, 0.4, 1.6);
  const auto op = assemble_backward(make_stuart_landau({1.0, 1.7, 0.3}), g);
  const Eigen::VectorXd la = apply_to_alpha(op);
  EXPECT_LT((la.array() - 1.7).abs().maxCoeff(), 1e-12);
}

TEST(Operators, StationaryEdgeFluxesBalanceAtEveryNode) {
  const auto g = fixtures::grid(48, 24, 0.3, 2.2);
  const auto m = make_linear_focus(fixtures::focus(-1.0, -4.0, 1.0, -1.0, 1.0));
  const auto p = stationary_density(assemble_forward(m, g));
  const auto fl = edge_fluxes(m, *g, p.values);
  const double scale = fl.alpha_flux.cwiseAbs().maxCoeff();
  for (int j = 0; j < g->n_beta(); ++j) {
    for (int i = 0; i < g->n_alpha(); ++i) {
      const int k = g->index(i, j);
      double net = fl.alpha_flux[k] - fl.alpha_flux[g->index(g->wrap_alpha_index(i - 1), j)];
      net += fl.beta_flux[k];
      if (j > 0) net -= fl.beta_flux[g->index(i, j - 1)];
      EXPECT_LT(std::abs(net), 1e-9 * scale) << i << "," << j;
    }
  }
}

TEST(Operators, PecletReportAndCooExport) {
  const auto g = fixtures::grid(16, 8, 0.5, 1.5);
  AssemblyReport rep;
  const auto op = assemble_backward(make_stuart_landau({1.0, 1.0, 0.5}), g, &rep);
  EXPECT_GT(rep.max_peclet, 0.0);
  const auto path = std::filesystem::temp_directory_path() / "stochphase_coo.csv";
  write_operator_coo(op, path.string());
  std::ifstream in(path);
  std::string line;
  long lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_GE(lines, op.matrix.nonZeros());
  EXPECT_LE(lines, op.matrix.nonZeros() + 1);
}
