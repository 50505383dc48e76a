#pragma once

#include "stochphase/deterministic.hpp"
#include "stochphase/empirical.hpp"
#include "stochphase/grid.hpp"
#include "stochphase/mrt.hpp"
#include "stochphase/simulate.hpp"

#include <string>
#include <vector>

namespace stochphase {

/// Field CSV, column order fixed:
/// i_alpha,i_beta,alpha,beta,x,y,value_re,value_im
void write_field_csv(const std::string& path, const ScalarField& field);
void write_field_csv(const std::string& path, const ComplexField& field);

struct FieldRow {
  int i_alpha = 0;
  int i_beta = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double x = 0.0;
  double y = 0.0;
  double value_re = 0.0;
  double value_im = 0.0;
};
std::vector<FieldRow> read_field_csv(const std::string& path);

/// traj_id,t,x,y
void write_trajectory_csv(const std::string& path,
                          const TrajectoryEnsemble& ensemble);

/// x,y,jx,jy,count (masked bins are written with jx = jy = 0)
void write_quiver_csv(const std::string& path, const CurrentEstimate& current);

/// level,vertex_index,x,y
void write_isochrons_csv(const std::string& path,
                         const std::vector<Polyline>& lines);

/// t,ux,uy,zx,zy
void write_prc_csv(const std::string& path, const LimitCycle& cycle,
                   const AdjointSolution& adjoint);

/// lag,re,im
void write_autocorrelation_csv(const std::string& path,
                               const Autocorrelation& c);

/// Shortest round-trip decimal representation used by every writer.
std::string format_double(double v);

}  // namespace stochphase
