#include "stochphase/config.hpp"
#include "stochphase/errors.hpp"
#include "stochphase/io.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stochphase;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / ("stochphase_" + name); }

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Io, FormatDoubleRoundTrips) {
  for (double v : {0.1, -1.0 / 3.0, 6.283185307179586, 1e-300, 0.0, 12345678.9}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Io, ComplexFieldRoundTrip) {
  const auto g = fixtures::grid(8, 5, 0.5, 1.5);
  ComplexField f(g, Eigen::VectorXcd(g->size()));
  for (int k = 0; k < g->size(); ++k) f.values[k] = {k / 7.0, -k / 3.0};
  write_field_csv(tmp("field.csv").string(), f);
  EXPECT_EQ(lines(tmp("field.csv")).front(), "i_alpha,i_beta,alpha,beta,x,y,value_re,value_im");
  const auto rows = read_field_csv(tmp("field.csv").string());
  ASSERT_EQ(static_cast<int>(rows.size()), g->size());
  for (const auto& r : rows) {
    const int k = g->index(r.i_alpha, r.i_beta);
    EXPECT_EQ(r.value_re, f.values[k].real());
    EXPECT_EQ(r.value_im, f.values[k].imag());
    EXPECT_EQ(r.x, g->position(k).x());
    EXPECT_EQ(r.alpha, g->alpha(r.i_alpha));
  }
}

TEST(Io, ScalarFieldHasZeroImaginaryPart) {
  const auto g = fixtures::grid(8, 5, 0.5, 1.5);
  write_field_csv(tmp("scalar.csv").string(), ScalarField(g, Eigen::VectorXd::Ones(g->size())));
  for (const auto& r : read_field_csv(tmp("scalar.csv").string())) {
    EXPECT_EQ(r.value_re, 1.0);
    EXPECT_EQ(r.value_im, 0.0);
  }
}

TEST(Io, ReadRejectsForeignHeader) {
  std::ofstream(tmp("bad.csv")) << "a,b,c\n1,2,3\n";
  EXPECT_ANY_THROW(read_field_csv(tmp("bad.csv").string()));
}

TEST(Io, TrajectoryAndAutocorrelationSchemas) {
  const auto m = make_stuart_landau({1.0, 1.0, 0.2});
  SimConfig c;
  c.n_steps = 10;
  c.n_samples = 3;
  const auto e = euler_maruyama(m, c);
  write_trajectory_csv(tmp("traj.csv").string(), e);
  const auto t = lines(tmp("traj.csv"));
  EXPECT_EQ(t.front(), "traj_id,t,x,y");
  EXPECT_EQ(static_cast<int>(t.size()), 1 + 3 * 11);

  Autocorrelation a;
  a.lags = {0.0, 0.1};
  a.values = {1.0, {0.5, 0.25}};
  write_autocorrelation_csv(tmp("ac.csv").string(), a);
  const auto l = lines(tmp("ac.csv"));
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], "lag,re,im");
  EXPECT_EQ(l[2], "0.1,0.5,0.25");
}

TEST(Io, QuiverAndIsochronSchemas) {
  CurrentEstimate est;
  est.bins.nx = est.bins.ny = 2;
  est.cells.resize(4);
  est.cells[1].masked = false;
  est.cells[1].current = Vec2(0.5, -1.0);
  est.cells[1].count = 9;
  write_quiver_csv(tmp("quiver.csv").string(), est);
  const auto q = lines(tmp("quiver.csv"));
  EXPECT_EQ(q.front(), "x,y,jx,jy,count");
  EXPECT_EQ(q.size(), 5u);

  write_isochrons_csv(tmp("iso.csv").string(), {{1.5, {Vec2(0, 1), Vec2(0, 2)}}});
  const auto iso = lines(tmp("iso.csv"));
  EXPECT_EQ(iso.front(), "level,vertex_index,x,y");
  EXPECT_EQ(iso[2], "1.5,1,0,2");
}

TEST(Config, RunConfigRoundTrip) {
  RunConfig c;
  c.model = fixtures::focus(-1.0, -4.0, 1.0, -1.0, 1.0);
  c.grid.n_alpha = 96;
  c.sim.seed = 99;
  c.sim.reflection = AnnulusReflection{Vec2::Zero(), 0.1, 3.0};
  c.solver.omega_guess = 2.0;
  c.extra["verify"] = {{"return_repeats", 500}};
  const auto j = run_config_to_json(c);
  const auto back = run_config_from_json(j);
  EXPECT_EQ(run_config_to_json(back), j);
  EXPECT_EQ(std::get<LinearFocusParams>(back.model).A(0, 1), -4.0);
  EXPECT_EQ(back.extra.at("verify").at("return_repeats"), 500);
}

TEST(Config, RejectsUnknownKeys) {
  using nlohmann::json;
  EXPECT_THROW(run_config_from_json(json{{"grid", {{"n_alfa", 10}}}}), ParameterError);
  EXPECT_THROW(run_config_from_json(json{{"model", {{"model", "duffing"}}}}), ParameterError);
  EXPECT_THROW(run_config_from_json(json{{"sim", {{"dt", "fast"}}}}), ParameterError);
  EXPECT_THROW(verify_options_from_json(json{{"sigmas", 2}}), ParameterError);
}

TEST(Config, HorizonAndDefaults) {
  using nlohmann::json;
  const auto c = run_config_from_json(
      json{{"model", {{"model", "stuart_landau"}, {"params", {{"a", 4.0}, {"sigma", 0.3}}}}},
           {"sim", {{"dt", 0.01}, {"T", 1000.0}}}});
  EXPECT_EQ(c.sim.n_steps, 100000);
  EXPECT_NEAR(c.sim.horizon(), 1000.0, 1e-9);
  // Default annulus brackets the cycle radius.
  EXPECT_LT(c.grid.r_in, 2.0);
  EXPECT_GT(c.grid.r_out, 2.0);
  const auto v = verify_options_from_json(json{{"isochron_radii", {0.3, 0.6}}, {"mc_sigmas", 2.5}});
  EXPECT_EQ(v.isochron_radii.size(), 2u);
  EXPECT_EQ(v.mc_sigmas, 2.5);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"focus.json", "focus_eig.json", "sl.json", "fig1_a4.json", "fig1_a1.json"}) {
    const fs::path p = fs::path(STOCHPHASE_CONFIG_DIR) / name;
    EXPECT_NO_THROW(load_run_config(p.string())) << name;
  }
}
