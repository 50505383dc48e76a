#pragma once

#include "stochphase/grid.hpp"
#include "stochphase/simulate.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace stochphase {

struct KdeOptions {
  std::optional<Vec2> bandwidth;  ///< per-axis; Silverman's rule if empty
  std::optional<int> record;      ///< time slice; terminal record if empty
};

/// Silverman's rule of thumb per axis: 1.06 s n^{-1/5}.
Vec2 silverman_bandwidth(const std::vector<Vec2>& samples);

/// Gaussian product-kernel density estimate on the grid nodes.
ScalarField kde_density(const TrajectoryEnsemble& ensemble,
                        std::shared_ptr<const AnnulusGrid> grid,
                        const KdeOptions& options = {});

/// Cartesian bins for quiver output.
struct BinGrid {
  Vec2 lower = Vec2(-2.0, -2.0);
  Vec2 upper = Vec2(2.0, 2.0);
  int nx = 20;
  int ny = 20;

  double area() const {
    return (upper.x() - lower.x()) * (upper.y() - lower.y()) / (nx * ny);
  }
  Vec2 center(int ix, int iy) const;
  /// Flat index or -1 if outside.
  int locate(const Vec2& x) const;
};

struct CurrentOptions {
  double burn_in_fraction = 0.2;
  long min_count = 50;
};

struct QuiverBin {
  Vec2 center = Vec2::Zero();
  Vec2 current = Vec2::Zero();
  Vec2 std_error = Vec2::Zero();
  long count = 0;
  bool masked = true;
};

struct CurrentEstimate {
  BinGrid bins;
  std::vector<QuiverBin> cells;  ///< iy * nx + ix
};

/// Stationary current from midpoint-attributed displacements:
/// J_bin = Σ (x_{k+1} - x_k)/Δt / (M · area), M the number of increments.
CurrentEstimate binned_current(const TrajectoryEnsemble& ensemble,
                               const BinGrid& bins,
                               const CurrentOptions& options = {});

struct FluxEstimate {
  double flux = 0.0;  ///< net crossings per unit time
  double std_error = 0.0;
};

/// Net counter-clockwise crossings of the ray {angle = 0} around `center` per
/// unit time, averaged over trajectories after burn-in.
FluxEstimate ray_flux(const TrajectoryEnsemble& ensemble, const Vec2& center,
                      double burn_in_fraction = 0.2);

struct Autocorrelation {
  std::vector<double> lags;
  std::vector<std::complex<double>> values;
};

using ComplexObservable = std::function<std::complex<double>(const Vec2&)>;

/// C(τ) = ⟨Q(x(t+τ)) conj(Q(x(t)))⟩ over t after burn-in and over samples.
/// Lags are in records and may be negative. Throws ParameterError if a lag is
/// not shorter than the post-burn-in trajectory.
Autocorrelation autocorrelation(const TrajectoryEnsemble& ensemble,
                                const ComplexObservable& q,
                                const std::vector<int>& lags,
                                double burn_in_fraction = 0.2);

struct DecayFit {
  double decay_rate = 0.0;     ///< slope of ln|C(τ)|
  double rotation_rate = 0.0;  ///< slope of unwrapped arg C(τ)
  int points = 0;
};

/// Least-squares fit on non-negative lags while |C(τ)| >= min_ratio·|C(0)|.
DecayFit fit_decay_rotation(const Autocorrelation& c, double min_ratio = 0.1);

struct PeriodEstimate {
  double mean_period = 0.0;
  double std_error = 0.0;
  double mean_angular_velocity = 0.0;
  double angular_velocity_std_error = 0.0;
};

/// Total unwrapped angle around `center` divided by total time, converted to
/// 2π/⟨ω⟩. Throws DomainError if the total winding is below 2π.
PeriodEstimate empirical_mean_period(const TrajectoryEnsemble& ensemble,
                                     const Vec2& center,
                                     double burn_in_fraction = 0.0);

/// Fraction of terminal-time samples inside the grid's annulus.
double mass_fraction_inside(const TrajectoryEnsemble& ensemble,
                            const AnnulusGrid& grid);

/// Radial marginal of a density on the grid: ∫ p r dalpha at each beta row.
std::vector<double> radial_marginal(const ScalarField& density);

}  // namespace stochphase
