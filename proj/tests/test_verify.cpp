#include "stochphase/config.hpp"
#include "stochphase/verify.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace stochphase;

namespace {

VerificationReport grid_only(const ModelConfig& mc, int na, int nb, double u_shift = 0.0) {
  GridSpec g = default_grid_for(mc);
  g.n_alpha = na;
  g.n_beta = nb;
  VerifyOptions o;
  o.run_monte_carlo = false;
  o.u_perturbation = u_shift;
  return run_identity_suite(make_model(mc), g, SimConfig{}, o);
}

}  // namespace

TEST(Verify, GridIdentitiesPassForStuartLandau) {
  const auto r = grid_only(StuartLandauParams{1.0, 1.0, 0.3}, 64, 32);
  ASSERT_EQ(r.checks.size(), 3u);
  for (const auto& c : r.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
  for (const char* key : {"lambda1_re", "lambda1_im", "Tbar", "delta_omega", "arg_lambda1"})
    EXPECT_TRUE(r.manifest.contains(key)) << key;
}

TEST(Verify, GridIdentitiesPassForFocus) {
  const auto r = grid_only(fixtures::focus(-1.0, -4.0, 1.0, -1.0, 1.0), 64, 32);
  for (const auto& c : r.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
  for (const auto& c : r.checks) EXPECT_GT(c.tolerance, 0.0);
  const auto res = grid_identity_residuals(
      make_linear_focus(fixtures::focus(-1.0, -4.0, 1.0, -1.0, 1.0)),
      [] {
        GridSpec g = default_grid_for(fixtures::focus(-1.0, -4.0, 1.0, -1.0, 1.0));
        g.n_alpha = 64;
        g.n_beta = 32;
        return g;
      }());
  EXPECT_DOUBLE_EQ(r.check("spectral_generator_identity").tolerance, 10.0 * res.spectral_estimate);
}

TEST(Verify, CorruptedAmplitudeFailsSpectralIdentity) {
  const auto r = grid_only(fixtures::focus(-1.0, -4.0, 1.0, -1.0, 1.0), 64, 32, 0.1);
  EXPECT_TRUE(r.check("mrt_generator_identity").pass);
  EXPECT_FALSE(r.check("spectral_generator_identity").pass);
  EXPECT_FALSE(r.all_pass());
}

TEST(Verify, ResidualsConvergeAtSecondOrder) {
  const ModelConfig mc = StuartLandauParams{1.0, 1.0, 0.3};
  GridSpec g = default_grid_for(mc);
  g.n_alpha = 64;
  g.n_beta = 32;
  const auto coarse = grid_identity_residuals(make_model(mc), g);
  g.n_alpha = 128;
  g.n_beta = 64;
  const auto fine = grid_identity_residuals(make_model(mc), g);
  EXPECT_NEAR(coarse.spectral / fine.spectral, 4.0, 0.6);
  EXPECT_NEAR(coarse.relation / fine.relation, 4.0, 0.6);
  EXPECT_LT(fine.mrt, 1e-9);  // MRT identity holds to solver precision
}

TEST(Verify, ReportIsDeterministicAndSerializes) {
  const ModelConfig mc = fixtures::focus(-1.0, -4.0, 1.0, -1.0, 1.0);
  GridSpec g = default_grid_for(mc);
  g.n_alpha = 48;
  g.n_beta = 24;
  SimConfig sim;
  sim.dt = 2e-3;
  sim.n_steps = 20000;
  sim.n_samples = 16;
  sim.record_every = 10;
  sim.seed = 3;
  VerifyOptions o;
  o.return_repeats = 50;
  const auto a = run_identity_suite(make_model(mc), g, sim, o);
  const auto b = run_identity_suite(make_model(mc), g, sim, o);
  ASSERT_EQ(a.checks.size(), 6u);
  const auto& names = identity_check_names();
  for (std::size_t k = 0; k < names.size(); ++k) EXPECT_EQ(a.checks[k].name, names[k]);
  EXPECT_EQ(a.to_json(), b.to_json());
  const auto j = a.to_json();
  EXPECT_EQ(j.at("checks").size(), 6u);
  for (const auto& c : j.at("checks"))
    for (const char* key : {"name", "value", "tolerance", "pass"}) EXPECT_TRUE(c.contains(key));
  EXPECT_EQ(j.at("manifest").at("seed"), 3);
}
