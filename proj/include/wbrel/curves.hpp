#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wbrel/dists.hpp"
#include "wbrel/errors.hpp"
#include "wbrel/mcem.hpp"
#include "wbrel/sampler.hpp"

namespace wbrel {

enum class BandMethod { hpd, quantile };

inline std::string_view to_string(BandMethod m) { return m == BandMethod::hpd ? "hpd" : "quantile"; }

inline BandMethod parse_band_method(std::string_view s) {
  if (s == "hpd") return BandMethod::hpd;
  if (s == "quantile") return BandMethod::quantile;
  throw UsageError("band method must be 'hpd' or 'quantile', got '" + std::string(s) + "'");
}

class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw UsageError("time grid is empty");
    if (!(points_.front() >= 0.0)) throw UsageError("time grid must start at t >= 0");
    for (std::size_t i = 1; i < points_.size(); ++i)
      if (!(points_[i] > points_[i - 1])) throw UsageError("time grid must be strictly increasing");
  }

  /// `count` evenly spaced points on [0, t_max]; a single point sits at 0.
  static TimeGrid uniform(double t_max, std::size_t count) {
    if (count < 1) throw UsageError("time grid needs at least one point");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw UsageError("time grid maximum must be positive");
    std::vector<double> pts(count);
    for (std::size_t i = 0; i < count; ++i)
      pts[i] = count == 1 ? 0.0 : t_max * static_cast<double>(i) / static_cast<double>(count - 1);
    return TimeGrid(std::move(pts));
  }

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

 private:
  std::vector<double> points_;
};

struct ReliabilityBand {
  std::vector<double> t;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  double level = 0.95;
  BandMethod method = BandMethod::hpd;
};

/// Y_l(t) = F(t | beta_l, eta_l) for every draw.
inline std::vector<double> reliability_draws(const PosteriorDraws& d, double t) {
  if (!(t >= 0.0)) throw DomainError("reliability_draws: t must be nonnegative");
  std::vector<double> y(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) y[i] = -std::expm1(-weibull_cumhazard(d.draws[i], t));
  return y;
}

inline void require_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw UsageError("credible level must lie in (0, 1)");
}

/// Shortest window of ceil(level * n) sorted values; ties go to the lowest window.
inline std::pair<double, double> hpd_interval(std::span<const double> sample, double level) {
  require_level(level);
  if (sample.size() < 2) throw UsageError("hpd_interval needs at least two values");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  auto w = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n) - 1e-9));
  w = std::clamp<std::size_t>(w, 1, n);
  std::size_t best = 0;
  double best_width = x[w - 1] - x[0];
  for (std::size_t i = 1; i + w <= n; ++i) {
    const double width = x[i + w - 1] - x[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {x[best], x[best + w - 1]};
}

/// Linear-interpolation sample quantile, 0 <= q <= 1, on a sorted sample.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline std::pair<double, double> quantile_interval(std::span<const double> sample, double level) {
  require_level(level);
  if (sample.size() < 2) throw UsageError("quantile_interval needs at least two values");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  return {sorted_quantile(x, 0.5 * (1.0 - level)), sorted_quantile(x, 0.5 * (1.0 + level))};
}

inline std::pair<double, double> credible_interval(std::span<const double> sample, double level, BandMethod m) {
  return m == BandMethod::hpd ? hpd_interval(sample, level) : quantile_interval(sample, level);
}

namespace detail {

/// Summarizes, per grid point, a matrix of per-draw reliabilities.
template <class ReliabilityAt>
ReliabilityBand summarize_band(const TimeGrid& grid, std::size_t n_draws, double level, BandMethod method,
                               const ReliabilityAt& reliability_at) {
  require_level(level);
  if (n_draws < 2) throw UsageError("reliability bands need at least two draws");
  ReliabilityBand band;
  band.level = level;
  band.method = method;
  band.t = grid.points();
  std::vector<double> r(n_draws);
  for (double t : grid.points()) {
    double sum = 0.0;
    for (std::size_t l = 0; l < n_draws; ++l) {
      r[l] = reliability_at(l, t);
      sum += r[l];
    }
    const auto [lo, hi] = credible_interval(r, level, method);
    band.mean.push_back(sum / static_cast<double>(n_draws));
    band.lower.push_back(lo);
    band.upper.push_back(hi);
  }
  return band;
}

}  // namespace detail

inline ReliabilityBand reliability_band(const PosteriorDraws& d, const TimeGrid& grid, double level = 0.95,
                                        BandMethod method = BandMethod::hpd) {
  return detail::summarize_band(grid, d.size(), level, method, [&d](std::size_t l, double t) {
    return std::exp(-weibull_cumhazard(d.draws[l], t));
  });
}

struct MeanTime {
  double estimate;
  double sd;
};

/// Posterior mean and sd of E[T | beta, eta] = eta Gamma(1 + 1/beta).
inline MeanTime mean_time_posterior(const PosteriorDraws& d) {
  if (d.size() < 1) throw UsageError("mean_time_posterior needs at least one draw");
  std::vector<double> m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m[i] = weibull_mean(d.draws[i]);
  return {sample_mean(m), m.size() >= 2 ? sample_sd(m) : 0.0};
}

/// Draw-by-draw system reliability: the series product or the parallel
/// complement product of the component reliabilities.
inline ReliabilityBand system_band(const SystemFit& fit, const TimeGrid& grid, double level = 0.95,
                                   BandMethod method = BandMethod::hpd) {
  if (fit.component_fits.empty()) throw UsageError("system_band: no components");
  const std::size_t n = fit.component_fits.front().draws.size();
  for (const auto& c : fit.component_fits)
    if (c.draws.size() != n) throw UsageError("system_band: components have unequal draw counts");
  return detail::summarize_band(grid, n, level, method, [&](std::size_t l, double t) {
    if (fit.kind == SystemKind::series) {
      double log_r = 0.0;
      for (const auto& c : fit.component_fits) log_r -= weibull_cumhazard(c.draws.draws[l], t);
      return std::exp(log_r);
    }
    double q = 1.0;
    for (const auto& c : fit.component_fits) q *= -std::expm1(-weibull_cumhazard(c.draws.draws[l], t));
    return 1.0 - q;
  });
}

}  // namespace wbrel
