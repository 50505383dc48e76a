#include "stochphase/empirical.hpp"

#include "stochphase/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stochphase {

namespace {

int first_kept_record(const TrajectoryEnsemble& ens, double burn_in_fraction) {
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
    throw ParameterError(fmt::format(
        "burn-in fraction must lie in [0, 1), got {}", burn_in_fraction));
  return static_cast<int>(std::floor(burn_in_fraction * ens.n_records));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) /
                   static_cast<double>(v.size()));
}

}  // namespace

Vec2 silverman_bandwidth(const std::vector<Vec2>& samples) {
  if (samples.size() < 2)
    throw ParameterError("silverman_bandwidth: need at least two samples");
  Vec2 mean = Vec2::Zero();
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  Vec2 var = Vec2::Zero();
  for (const auto& s : samples) var += (s - mean).cwiseAbs2();
  var /= static_cast<double>(samples.size() - 1);
  const double factor =
      1.06 * std::pow(static_cast<double>(samples.size()), -0.2);
  return var.cwiseSqrt() * factor;
}

ScalarField kde_density(const TrajectoryEnsemble& ens,
                        std::shared_ptr<const AnnulusGrid> grid,
                        const KdeOptions& options) {
  const int rec = options.record.value_or(ens.n_records - 1);
  if (rec < 0 || rec >= ens.n_records)
    throw ParameterError(fmt::format("kde_density: record {} out of range", rec));
  std::vector<Vec2> samples(ens.n_samples);
  for (int s = 0; s < ens.n_samples; ++s) samples[s] = ens.state(s, rec);
  const Vec2 h = options.bandwidth.value_or(silverman_bandwidth(samples));
  if (!(h.x() > 0.0 && h.y() > 0.0))
    throw ParameterError("kde_density: bandwidth must be positive");

  const double norm = 1.0 / (2.0 * std::numbers::pi * h.x() * h.y() *
                             static_cast<double>(samples.size()));
  Eigen::VectorXd values(grid->size());
  for (int n = 0; n < grid->size(); ++n) {
    const Vec2 x = grid->position(n);
    double acc = 0.0;
    for (const auto& s : samples) {
      const double dx = (x.x() - s.x()) / h.x();
      const double dy = (x.y() - s.y()) / h.y();
      const double q = dx * dx + dy * dy;
      if (q < 64.0) acc += std::exp(-0.5 * q);
    }
    values[n] = acc * norm;
  }
  return ScalarField(std::move(grid), std::move(values), "P_kde", "1/area");
}

Vec2 BinGrid::center(int ix, int iy) const {
  return {lower.x() + (ix + 0.5) * (upper.x() - lower.x()) / nx,
          lower.y() + (iy + 0.5) * (upper.y() - lower.y()) / ny};
}

int BinGrid::locate(const Vec2& x) const {
  const double fx = (x.x() - lower.x()) / (upper.x() - lower.x());
  const double fy = (x.y() - lower.y()) / (upper.y() - lower.y());
  if (!(fx >= 0.0 && fx < 1.0 && fy >= 0.0 && fy < 1.0)) return -1;
  const int ix = std::min(nx - 1, static_cast<int>(fx * nx));
  const int iy = std::min(ny - 1, static_cast<int>(fy * ny));
  return iy * nx + ix;
}

CurrentEstimate binned_current(const TrajectoryEnsemble& ens,
                               const BinGrid& bins,
                               const CurrentOptions& options) {
  if (bins.nx < 1 || bins.ny < 1)
    throw ParameterError("binned_current: bin counts must be positive");
  const int first = first_kept_record(ens, options.burn_in_fraction);
  const double dt = ens.record_spacing();
  const std::size_t nbins = static_cast<std::size_t>(bins.nx) * bins.ny;
  std::vector<Vec2> sum(nbins, Vec2::Zero()), sum2(nbins, Vec2::Zero());
  std::vector<long> count(nbins, 0);
  double m = 0.0;
  for (int s = 0; s < ens.n_samples; ++s) {
    for (int r = first; r + 1 < ens.n_records; ++r) {
      const Vec2 a = ens.state(s, r), b = ens.state(s, r + 1);
      m += 1.0;
      const int k = bins.locate(0.5 * (a + b));
      if (k < 0) continue;
      const Vec2 v = (b - a) / dt;
      sum[k] += v;
      sum2[k] += v.cwiseAbs2();
      ++count[k];
    }
  }
  if (m == 0.0) throw ParameterError("binned_current: no increments after burn-in");

  CurrentEstimate out;
  out.bins = bins;
  out.cells.resize(nbins);
  const double area = bins.area();
  for (int iy = 0; iy < bins.ny; ++iy) {
    for (int ix = 0; ix < bins.nx; ++ix) {
      const int k = iy * bins.nx + ix;
      QuiverBin& c = out.cells[k];
      c.center = bins.center(ix, iy);
      c.count = count[k];
      c.masked = count[k] < options.min_count;
      c.current = sum[k] / (m * area);
      // y_k = v 1[bin] / area over all m increments.
      const Vec2 ey = sum[k] / (m * area);
      const Vec2 ey2 = sum2[k] / (m * area * area);
      c.std_error =
          ((ey2 - ey.cwiseAbs2()).cwiseMax(0.0) / m).cwiseSqrt();
    }
  }
  return out;
}

FluxEstimate ray_flux(const TrajectoryEnsemble& ens, const Vec2& center,
                      double burn_in_fraction) {
  const int first = first_kept_record(ens, burn_in_fraction);
  const double duration = ens.times.back() - ens.times[first];
  if (!(duration > 0.0)) throw ParameterError("ray_flux: empty time window");
  std::vector<double> per_sample(ens.n_samples);
  for (int s = 0; s < ens.n_samples; ++s) {
    long net = 0;
    Vec2 d = ens.state(s, first) - center;
    double prev = std::atan2(d.y(), d.x());
    for (int r = first + 1; r < ens.n_records; ++r) {
      d = ens.state(s, r) - center;
      const double cur = std::atan2(d.y(), d.x());
      if (std::abs(cur - prev) < std::numbers::pi) {
        if (prev < 0.0 && cur >= 0.0) ++net;
        if (prev >= 0.0 && cur < 0.0) --net;
      }
      prev = cur;
    }
    per_sample[s] = static_cast<double>(net) / duration;
  }
  return {mean_of(per_sample), std_error_of(per_sample)};
}

Autocorrelation autocorrelation(const TrajectoryEnsemble& ens,
                                const ComplexObservable& q,
                                const std::vector<int>& lags,
                                double burn_in_fraction) {
  const int first = first_kept_record(ens, burn_in_fraction);
  const int len = ens.n_records - first;
  for (int lag : lags) {
    if (std::abs(lag) >= len)
      throw ParameterError(fmt::format(
          "autocorrelation: lag {} not shorter than the {} kept records", lag,
          len));
  }
  std::vector<std::complex<double>> acc(lags.size(), 0.0);
  std::vector<double> cnt(lags.size(), 0.0);
  std::vector<std::complex<double>> qv(len);
  for (int s = 0; s < ens.n_samples; ++s) {
    for (int r = 0; r < len; ++r) qv[r] = q(ens.state(s, first + r));
    for (std::size_t k = 0; k < lags.size(); ++k) {
      const int lag = lags[k];
      const int lo = std::max(0, -lag), hi = std::min(len, len - lag);
      for (int t = lo; t < hi; ++t) acc[k] += qv[t + lag] * std::conj(qv[t]);
      cnt[k] += hi - lo;
    }
  }
  Autocorrelation out;
  for (std::size_t k = 0; k < lags.size(); ++k) {
    out.lags.push_back(lags[k] * ens.record_spacing());
    out.values.push_back(acc[k] / cnt[k]);
  }
  return out;
}

DecayFit fit_decay_rotation(const Autocorrelation& c, double min_ratio) {
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < c.lags.size(); ++k)
    if (c.lags[k] >= 0.0) order.push_back(k);
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return c.lags[a] < c.lags[b]; });
  if (order.empty())
    throw DomainError("fit_decay_rotation: no non-negative lags");
  const double c0 = std::abs(c.values[order.front()]);

  std::vector<double> t, lm, ph;
  double unwrap = 0.0, last = 0.0;
  for (std::size_t k : order) {
    const double mag = std::abs(c.values[k]);
    if (mag < min_ratio * c0) break;
    const double a = std::arg(c.values[k]);
    if (!t.empty()) unwrap += wrap_pi(a - last);
    else unwrap = a;
    last = a;
    t.push_back(c.lags[k]);
    lm.push_back(std::log(mag));
    ph.push_back(unwrap);
  }
  if (t.size() < 2)
    throw DomainError(
        "fit_decay_rotation: fewer than two lags above the magnitude cutoff");

  auto slope = [&](const std::vector<double>& y) {
    const double mt = mean_of(t), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      sxy += (t[k] - mt) * (y[k] - my);
      sxx += (t[k] - mt) * (t[k] - mt);
    }
    return sxy / sxx;
  };
  return {slope(lm), slope(ph), static_cast<int>(t.size())};
}

PeriodEstimate empirical_mean_period(const TrajectoryEnsemble& ens,
                                     const Vec2& center,
                                     double burn_in_fraction) {
  const int first = first_kept_record(ens, burn_in_fraction);
  const double duration = ens.times.back() - ens.times[first];
  if (!(duration > 0.0))
    throw ParameterError("empirical_mean_period: empty time window");
  std::vector<double> omega(ens.n_samples);
  double total = 0.0;
  for (int s = 0; s < ens.n_samples; ++s) {
    Vec2 d = ens.state(s, first) - center;
    double prev = std::atan2(d.y(), d.x());
    double wind = 0.0;
    for (int r = first + 1; r < ens.n_records; ++r) {
      d = ens.state(s, r) - center;
      const double cur = std::atan2(d.y(), d.x());
      wind += wrap_pi(cur - prev);
      prev = cur;
    }
    omega[s] = wind / duration;
    total += wind;
  }
  if (std::abs(total) < 2.0 * std::numbers::pi)
    throw DomainError(fmt::format(
        "empirical_mean_period: total winding {:.3g} is below one turn", total));
  PeriodEstimate out;
  out.mean_angular_velocity = mean_of(omega);
  out.angular_velocity_std_error = std_error_of(omega);
  out.mean_period = 2.0 * std::numbers::pi / out.mean_angular_velocity;
  out.std_error = 2.0 * std::numbers::pi * out.angular_velocity_std_error /
                  (out.mean_angular_velocity * out.mean_angular_velocity);
  return out;
}

double mass_fraction_inside(const TrajectoryEnsemble& ens,
                            const AnnulusGrid& grid) {
  int inside = 0;
  for (int s = 0; s < ens.n_samples; ++s)
    if (grid.contains(ens.state(s, ens.n_records - 1))) ++inside;
  return static_cast<double>(inside) / ens.n_samples;
}

std::vector<double> radial_marginal(const ScalarField& density) {
  const AnnulusGrid& g = *density.grid;
  std::vector<double> out(g.n_beta(), 0.0);
  for (int j = 0; j < g.n_beta(); ++j) {
    for (int i = 0; i < g.n_alpha(); ++i)
      out[j] += density.values[g.index(i, j)];
    out[j] *= g.radius(j) * g.h_alpha();
  }
  return out;
}

}  // namespace stochphase
