#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "wbrel/errors.hpp"
#include "wbrel/rng.hpp"
#include "wbrel/special.hpp"

namespace wbrel {

/// Weibull shape/scale pair of one component.
struct ComponentParams {
  double beta = 1.0;  // shape
  double eta = 1.0;   // scale, time units

  bool valid() const noexcept { return beta > 0.0 && eta > 0.0 && std::isfinite(beta) && std::isfinite(eta); }
  friend bool operator==(const ComponentParams&, const ComponentParams&) = default;
};

inline void require_valid(const ComponentParams& p) {
  if (!p.valid()) throw DomainError("Weibull parameters must be positive and finite");
}

/// Gamma distribution given by its mean and variance: shape m^2/v, rate m/v.
struct MeanVarGamma {
  double m = 1.0;
  double v = 1.0;

  double shape() const noexcept { return m * m / v; }
  double rate() const noexcept { return m / v; }
};

// ---------------------------------------------------------------- Weibull

inline double weibull_reliability(const ComponentParams& p, double t) {
  if (!std::isfinite(t)) throw DomainError("weibull_reliability: time must be finite");
  if (t <= 0.0) return 1.0;
  return std::exp(-std::pow(t / p.eta, p.beta));
}

/// Cumulative hazard (t/eta)^beta evaluated through logs.
inline double weibull_cumhazard(const ComponentParams& p, double t) {
  if (t <= 0.0) return 0.0;
  return std::exp(p.beta * (std::log(t) - std::log(p.eta)));
}

inline double weibull_logpdf(const ComponentParams& p, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("weibull_logpdf: time must be positive and finite");
  const double z = std::log(t) - std::log(p.eta);
  return std::log(p.beta) - std::log(p.eta) + (p.beta - 1.0) * z - std::exp(p.beta * z);
}

inline double weibull_mean(const ComponentParams& p) { return p.eta * std::exp(log_gamma_fn(1.0 + 1.0 / p.beta)); }

inline double weibull_variance(const ComponentParams& p) {
  const double g1 = log_gamma_fn(1.0 + 1.0 / p.beta);
  const double g2 = log_gamma_fn(1.0 + 2.0 / p.beta);
  return p.eta * p.eta * std::exp(2.0 * g1) * std::expm1(g2 - 2.0 * g1);
}

/// Weibull squared coefficient of variation; strictly decreasing in beta.
inline double weibull_cv2(double beta) {
  return std::expm1(log_gamma_fn(1.0 + 2.0 / beta) - 2.0 * log_gamma_fn(1.0 + 1.0 / beta));
}

/// Solves for (beta, eta) matching the given mean and variance.
inline ComponentParams weibull_from_moments(double mean, double variance) {
  if (!(mean > 0.0) || !(variance > 0.0)) throw DomainError("weibull_from_moments: mean and variance must be positive");
  const double target = variance / (mean * mean);
  double lo = std::log(1e-3);
  double hi = std::log(1e3);
  auto f = [target](double log_beta) { return weibull_cv2(std::exp(log_beta)) - target; };
  if (!(f(lo) >= 0.0) || !(f(hi) <= 0.0))
    throw ConvergenceError("weibull_from_moments: no shape in [1e-3, 1e3] matches CV^2 = " + std::to_string(target));
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double beta = std::exp(0.5 * (lo + hi));
  return {beta, mean / std::exp(log_gamma_fn(1.0 + 1.0 / beta))};
}

// ---------------------------------------------------------------- gamma

inline double gamma_mv_logpdf(const MeanVarGamma& g, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("gamma_mv_logpdf: argument must be positive and finite");
  const double a = g.shape();
  const double b = g.rate();
  return (a - 1.0) * std::log(x) - b * x + a * std::log(b) - log_gamma_fn(a);
}

struct GammaShapeScale {
  double shape;
  double scale;
};

inline GammaShapeScale gamma_from_moments(double mean, double variance) {
  if (!(mean > 0.0) || !(variance > 0.0)) throw DomainError("gamma_from_moments: mean and variance must be positive");
  return {mean * mean / variance, variance / mean};
}

struct LognormalParams {
  double mu;
  double sigma;
};

inline LognormalParams lognormal_from_moments(double mean, double variance) {
  if (!(mean > 0.0) || !(variance > 0.0))
    throw DomainError("lognormal_from_moments: mean and variance must be positive");
  const double s2 = std::log1p(variance / (mean * mean));
  return {std::log(mean) - 0.5 * s2, std::sqrt(s2)};
}

// ---------------------------------------------------------------- generators

enum class Family { weibull, gamma, lognormal };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::weibull: return "weibull";
    case Family::gamma: return "gamma";
    case Family::lognormal: return "lognormal";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  if (s == "weibull") return Family::weibull;
  if (s == "gamma") return Family::gamma;
  if (s == "lognormal") return Family::lognormal;
  throw UsageError("unknown distribution family '" + std::string(s) + "'");
}

/// A lifetime distribution given by family and its first two moments.
struct GeneratorSpec {
  Family family = Family::weibull;
  double mean = 1.0;
  double variance = 1.0;
};

/// Generator ready to draw: moments already inverted.
class LifetimeGenerator {
 public:
  explicit LifetimeGenerator(const GeneratorSpec& spec) : spec_(spec) {
    if (!(spec.mean > 0.0) || !(spec.variance > 0.0))
      throw DomainError("generator mean and variance must be positive");
    switch (spec.family) {
      case Family::weibull: {
        const auto p = weibull_from_moments(spec.mean, spec.variance);
        a_ = p.beta;
        b_ = p.eta;
        break;
      }
      case Family::gamma: {
        const auto g = gamma_from_moments(spec.mean, spec.variance);
        a_ = g.shape;
        b_ = g.scale;
        break;
      }
      case Family::lognormal: {
        const auto l = lognormal_from_moments(spec.mean, spec.variance);
        a_ = l.mu;
        b_ = l.sigma;
        break;
      }
    }
  }

  const GeneratorSpec& spec() const noexcept { return spec_; }

  double operator()(RngStream& rng) const {
    switch (spec_.family) {
      case Family::weibull: return std::weibull_distribution<double>(a_, b_)(rng);
      case Family::gamma: return std::gamma_distribution<double>(a_, b_)(rng);
      case Family::lognormal: return std::lognormal_distribution<double>(a_, b_)(rng);
    }
    return 0.0;
  }

 private:
  GeneratorSpec spec_;
  double a_ = 0.0;
  double b_ = 0.0;
};

inline std::vector<double> sample(const GeneratorSpec& spec, std::size_t n, RngStream& rng) {
  if (n == 0) throw UsageError("sample: n must be at least 1");
  const LifetimeGenerator gen(spec);
  std::vector<double> out(n);
  for (auto& x : out) x = gen(rng);
  return out;
}

}  // namespace wbrel
