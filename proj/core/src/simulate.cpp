#include "stochphase/simulate.hpp"

#include "stochphase/errors.hpp"
#include "stochphase/grid.hpp"
#include "stochphase/parallel.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace stochphase {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Vec2 draw_initial(const InitialCondition& ic, std::mt19937_64& rng) {
  if (const auto* p = std::get_if<Vec2>(&ic)) return *p;
  const auto& s = std::get<UniformAnnulusSampler>(ic);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r2 = s.r_min * s.r_min +
                    u(rng) * (s.r_max * s.r_max - s.r_min * s.r_min);
  const double th = 2.0 * std::numbers::pi * u(rng);
  return s.center + std::sqrt(r2) * Vec2(std::cos(th), std::sin(th));
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ParameterError(fmt::format("sim: dt must be positive, got {}", dt));
  if (n_steps < 1)
    throw ParameterError(fmt::format("sim: n_steps must be >= 1, got {}", n_steps));
  if (n_samples < 1)
    throw ParameterError(
        fmt::format("sim: n_samples must be >= 1, got {}", n_samples));
  if (record_every < 1)
    throw ParameterError(
        fmt::format("sim: record_every must be >= 1, got {}", record_every));
  if (record_start < 0 || record_start > n_steps)
    throw ParameterError(fmt::format(
        "sim: record_start must lie in [0, n_steps], got {}", record_start));
  if (!(blowup_radius > 0.0))
    throw ParameterError("sim: blowup_radius must be positive");
  if (const auto* s = std::get_if<UniformAnnulusSampler>(&initial)) {
    if (!(s->r_min >= 0.0 && s->r_max > s->r_min))
      throw ParameterError("sim: sampler needs 0 <= r_min < r_max");
  }
  if (reflection && !(reflection->r_in >= 0.0 && reflection->r_out > reflection->r_in))
    throw ParameterError("sim: reflection needs 0 <= r_in < r_out");
}

std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state))};
  return std::mt19937_64(seq);
}

Vec2 reflect_into_annulus(const Vec2& x, const AnnulusReflection& r) {
  Vec2 d = x - r.center;
  double rad = d.norm();
  if (rad >= r.r_in && rad <= r.r_out) return x;
  if (rad == 0.0) return r.center + Vec2(r.r_in, 0.0);
  const double width = r.r_out - r.r_in;
  double s = rad;
  // Fold into [r_in, r_out] by repeated mirroring.
  for (int k = 0; k < 64 && (s < r.r_in || s > r.r_out); ++k) {
    if (s > r.r_out) s = 2.0 * r.r_out - s;
    if (s < r.r_in) s = 2.0 * r.r_in - s;
  }
  if (s < r.r_in || s > r.r_out) s = r.r_in + 0.5 * width;
  return r.center + d * (s / rad);
}

Vec2 em_step(const OscillatorModel& model, const Vec2& x, double dt,
             double sqrt_dt, std::mt19937_64& rng,
             std::normal_distribution<double>& normal) {
  const NoiseMatrix g = model.noise(x);
  Eigen::VectorXd xi(g.cols());
  for (int k = 0; k < xi.size(); ++k) xi[k] = normal(rng);
  return x + model.drift(x) * dt + g * xi * sqrt_dt;
}

TrajectoryEnsemble euler_maruyama(const OscillatorModel& model,
                                  const SimConfig& cfg) {
  cfg.validate();
  TrajectoryEnsemble out;
  out.n_samples = cfg.n_samples;
  out.dt = cfg.dt;
  out.record_every = cfg.record_every;
  out.seed = cfg.seed;
  out.n_records =
      static_cast<int>((cfg.n_steps - cfg.record_start) / cfg.record_every) + 1;
  out.times.resize(out.n_records);
  for (int r = 0; r < out.n_records; ++r) {
    out.times[r] = cfg.dt * static_cast<double>(cfg.record_start +
                                                std::int64_t{r} * cfg.record_every);
  }
  out.states.assign(2 * static_cast<std::size_t>(out.n_samples) * out.n_records, 0.0);
  out.stream_ids.resize(out.n_samples);

  const double sqrt_dt = std::sqrt(cfg.dt);
  parallel_for(out.n_samples, cfg.threads, [&](std::size_t s) {
    out.stream_ids[s] = s;
    auto rng = stream_engine(cfg.seed, s);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec2 x = draw_initial(cfg.initial, rng);
    if (cfg.reflection) x = reflect_into_annulus(x, *cfg.reflection);
    double* dst = out.states.data() + 2 * s * out.n_records;
    int rec = 0;
    for (std::int64_t k = 0; k <= cfg.n_steps; ++k) {
      if (k >= cfg.record_start && (k - cfg.record_start) % cfg.record_every == 0) {
        dst[2 * rec] = x.x();
        dst[2 * rec + 1] = x.y();
        ++rec;
      }
      if (k == cfg.n_steps) break;
      x = em_step(model, x, cfg.dt, sqrt_dt, rng, normal);
      if (cfg.reflection) x = reflect_into_annulus(x, *cfg.reflection);
      if (!x.allFinite() || x.norm() > cfg.blowup_radius) {
        throw DivergenceError(fmt::format(
            "euler_maruyama: sample {} left radius {} at t = {}", s,
            cfg.blowup_radius, cfg.dt * static_cast<double>(k + 1)));
      }
    }
  });
  return out;
}

PhaseFunction polar_angle_section(const Vec2& center) {
  return [center](const Vec2& x) {
    return std::atan2(x.y() - center.y(), x.x() - center.x());
  };
}

std::vector<ReturnTimeStats> first_return_times(
    const OscillatorModel& model, const SimConfig& cfg,
    const PhaseFunction& section, const std::vector<Vec2>& starts) {
  cfg.validate();
  const std::size_t reps = static_cast<std::size_t>(cfg.n_samples);
  std::vector<double> times(starts.size() * reps, 0.0);
  const double sqrt_dt = std::sqrt(cfg.dt);

  parallel_for(times.size(), cfg.threads, [&](std::size_t task) {
    const std::size_t si = task / reps;
    auto rng = stream_engine(cfg.seed, task);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec2 x = starts[si];
    double phase_prev = section(x);
    double lift = 0.0;
    const double target = 2.0 * std::numbers::pi;
    for (std::int64_t k = 1; k <= cfg.n_steps; ++k) {
      x = em_step(model, x, cfg.dt, sqrt_dt, rng, normal);
      if (cfg.reflection) x = reflect_into_annulus(x, *cfg.reflection);
      if (!x.allFinite() || x.norm() > cfg.blowup_radius) {
        throw DivergenceError(fmt::format(
            "first_return_times: path from start {} diverged", si));
      }
      const double phase = section(x);
      const double next = lift + wrap_pi(phase - phase_prev);
      phase_prev = phase;
      if (next >= target) {
        const double frac = (target - lift) / (next - lift);
        times[task] = cfg.dt * (static_cast<double>(k - 1) + frac);
        return;
      }
      lift = next;
    }
    throw TimeoutError(fmt::format(
        "first_return_times: no return within {} steps from start {}",
        cfg.n_steps, si));
  });

  std::vector<ReturnTimeStats> out(starts.size());
  for (std::size_t si = 0; si < starts.size(); ++si) {
    double mean = 0.0;
    for (std::size_t r = 0; r < reps; ++r) mean += times[si * reps + r];
    mean /= static_cast<double>(reps);
    double var = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double d = times[si * reps + r] - mean;
      var += d * d;
    }
    var /= static_cast<double>(std::max<std::size_t>(reps - 1, 1));
    out[si] = {starts[si], mean, std::sqrt(var / static_cast<double>(reps)),
               static_cast<int>(reps)};
  }
  return out;
}

}  // namespace stochphase
