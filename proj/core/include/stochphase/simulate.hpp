#pragma once

#include "stochphase/models.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <variant>
#include <vector>

namespace stochphase {

/// Initial states drawn uniformly (by area) on the annulus r_min <= |x - c|
/// <= r_max.
struct UniformAnnulusSampler {
  Vec2 center = Vec2::Zero();
  double r_min = 0.0;
  double r_max = 1.0;
};

using InitialCondition = std::variant<Vec2, UniformAnnulusSampler>;

/// Mirror reflection at the two circles of an annulus after each step.
struct AnnulusReflection {
  Vec2 center = Vec2::Zero();
  double r_in = 0.0;
  double r_out = 0.0;
};

struct SimConfig {
  double dt = 1e-2;
  std::int64_t n_steps = 1000;
  int n_samples = 1;
  std::uint64_t seed = 0;
  InitialCondition initial = Vec2(1.0, 0.0);
  /// Store every k-th state, starting at step `record_start`.
  int record_every = 1;
  std::int64_t record_start = 0;
  double blowup_radius = 1e6;
  std::optional<AnnulusReflection> reflection;
  int threads = 0;  ///< 0: hardware concurrency

  double horizon() const { return dt * static_cast<double>(n_steps); }
  void validate() const;
};

/// Recorded sample paths. `states` is laid out [sample][record][coord].
struct TrajectoryEnsemble {
  std::vector<double> times;
  std::vector<double> states;
  int n_samples = 0;
  int n_records = 0;
  double dt = 0.0;  ///< integration step
  int record_every = 1;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> stream_ids;

  Vec2 state(int sample, int record) const {
    const std::size_t k =
        2 * (static_cast<std::size_t>(sample) * n_records + record);
    return {states[k], states[k + 1]};
  }
  double record_spacing() const { return dt * record_every; }
};

/// Independent engine for stream `stream` of a run seeded with `seed`.
std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream);

/// x_{k+1} = x_k + f(x_k) dt + g(x_k) √dt ξ_k with per-trajectory streams, so
/// the output does not depend on the thread count. Throws DivergenceError if a
/// state leaves the blow-up radius.
TrajectoryEnsemble euler_maruyama(const OscillatorModel& model,
                                  const SimConfig& cfg);

/// One Euler-Maruyama step (shared with the return-time sampler).
Vec2 em_step(const OscillatorModel& model, const Vec2& x, double dt,
             double sqrt_dt, std::mt19937_64& rng,
             std::normal_distribution<double>& normal);

/// Applies the mirror reflection in radius.
Vec2 reflect_into_annulus(const Vec2& x, const AnnulusReflection& r);

/// Angle-valued function whose zero level (mod 2π) is the section.
using PhaseFunction = std::function<double(const Vec2&)>;

struct ReturnTimeStats {
  Vec2 start = Vec2::Zero();
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
};

/// Mean first-return time to the section {phase = phase(start)}: for each
/// start, `cfg.n_samples` repeats are integrated until the lifted phase first
/// advances by 2π; crossing times are linearly interpolated. `cfg.n_steps` bounds each repeat
/// (TimeoutError when exceeded).
std::vector<ReturnTimeStats> first_return_times(
    const OscillatorModel& model, const SimConfig& cfg,
    const PhaseFunction& section, const std::vector<Vec2>& starts);

/// Section defined by the polar angle around `center`.
PhaseFunction polar_angle_section(const Vec2& center);

}  // namespace stochphase
