#pragma once

#include "stochphase/grid.hpp"
#include "stochphase/models.hpp"

#include <memory>

namespace stochphase::fixtures {

inline LinearFocusParams focus(double a00, double a01, double a10, double a11,
                               double sigma) {
  LinearFocusParams p;
  p.A << a00, a01, a10, a11;
  p.sigma = sigma;
  return p;
}

inline std::shared_ptr<const AnnulusGrid> grid(int na, int nb, double r_in,
                                               double r_out) {
  GridSpec s;
  s.n_alpha = na;
  s.n_beta = nb;
  s.r_in = r_in;
  s.r_out = r_out;
  return AnnulusGrid::make(s);
}

}  // namespace stochphase::fixtures
