#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wbrel/dists.hpp"
#include "wbrel/errors.hpp"
#include "wbrel/rng.hpp"

namespace wbrel {

struct McmcConfig {
  std::size_t n_p = 1000;
  std::size_t burn_in = 10000;
  std::size_t thin = 10;
  ComponentParams init{1.0, 1.0};
  double adapt_target = 0.30;
  double step_init = 0.5;

  void validate() const {
    if (n_p < 1) throw UsageError("mcmc: n_p must be at least 1");
    if (thin < 1) throw UsageError("mcmc: thin must be at least 1");
    if (!(adapt_target > 0.0 && adapt_target < 1.0)) throw UsageError("mcmc: adapt_target must lie in (0, 1)");
    if (!(step_init > 0.0) || !std::isfinite(step_init)) throw UsageError("mcmc: step_init must be positive");
    if (!init.valid()) throw UsageError("mcmc: initial parameters must be positive");
  }
};

struct PosteriorDraws {
  std::vector<ComponentParams> draws;
  double acceptance_rate = 0.0;
  double step_final = 0.0;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return draws.size(); }
  std::vector<double> betas() const {
    std::vector<double> out(draws.size());
    std::transform(draws.begin(), draws.end(), out.begin(), [](const auto& d) { return d.beta; });
    return out;
  }
  std::vector<double> etas() const {
    std::vector<double> out(draws.size());
    std::transform(draws.begin(), draws.end(), out.begin(), [](const auto& d) { return d.eta; });
    return out;
  }
  ComponentParams mean() const {
    ComponentParams m{0.0, 0.0};
    for (const auto& d : draws) {
      m.beta += d.beta;
      m.eta += d.eta;
    }
    const double n = static_cast<double>(draws.size());
    return {m.beta / n, m.eta / n};
  }
};

inline double sample_mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Sample standard deviation, divisor n - 1.
inline double sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) throw UsageError("sample_sd needs at least two values");
  const double m = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double lag1_autocorrelation(std::span<const double> xs) {
  if (xs.size() < 3) return 0.0;
  const double m = sample_mean(xs);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    den += (xs[i] - m) * (xs[i] - m);
    if (i + 1 < xs.size()) num += (xs[i] - m) * (xs[i + 1] - m);
  }
  return den > 0.0 ? num / den : 0.0;
}

/// Random-walk Metropolis on (log beta, log eta) with a shared scalar step.
///
/// `log_kernel` is an unnormalized log density with respect to d(beta) d(eta);
/// the log-coordinate Jacobian is added here. During burn-in the step is tuned
/// by Robbins-Monro toward `adapt_target`; it is frozen for the collection phase.
/// Every iteration consumes two normals and one uniform, so a run with thin = T
/// visits exactly the states of a thin = 1 run and keeps every T-th.
template <class LogKernel>
PosteriorDraws run_chain(const LogKernel& log_kernel, const McmcConfig& cfg, RngStream& rng) {
  cfg.validate();
  const double k0 = log_kernel(cfg.init);
  if (!std::isfinite(k0)) throw NumericalError("run_chain: log kernel is not finite at the initial point");

  double xb = std::log(cfg.init.beta);
  double xe = std::log(cfg.init.eta);
  double cur = k0 + xb + xe;
  double log_step = std::log(cfg.step_init);
  constexpr double log_step_min = -9.2;  // ~1e-4
  constexpr double log_step_max = 2.3;   // ~10

  std::normal_distribution<double> normal(0.0, 1.0);
  PosteriorDraws out;
  out.draws.reserve(cfg.n_p);
  std::size_t accepted = 0;
  const std::size_t collect = cfg.n_p * cfg.thin;
  const std::size_t total = cfg.burn_in + collect;

  for (std::size_t i = 0; i < total; ++i) {
    const double step = std::exp(log_step);
    const double zb = normal(rng);
    const double ze = normal(rng);
    const double log_u = std::log(rng.uniform());
    const double yb = xb + step * zb;
    const double ye = xe + step * ze;
    const double ky = log_kernel(ComponentParams{std::exp(yb), std::exp(ye)});
    const double prop = std::isfinite(ky) ? ky + yb + ye : -INFINITY;
    const double log_alpha = prop - cur;
    const bool accept = log_u < log_alpha;

    if (i < cfg.burn_in) {
      const double alpha = log_alpha >= 0.0 ? 1.0 : std::exp(log_alpha);
      log_step += (alpha - cfg.adapt_target) / std::pow(static_cast<double>(i + 1), 0.6);
      log_step = std::clamp(log_step, log_step_min, log_step_max);
    } else {
      accepted += accept;
    }
    if (accept) {
      xb = yb;
      xe = ye;
      cur = prop;
    }
    if (i >= cfg.burn_in && (i - cfg.burn_in + 1) % cfg.thin == 0)
      out.draws.push_back({std::exp(xb), std::exp(xe)});
  }

  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(collect);
  out.step_final = std::exp(log_step);
  if (out.acceptance_rate < 0.05 || out.acceptance_rate > 0.95)
    out.warnings.push_back("acceptance rate " + std::to_string(out.acceptance_rate) + " outside [0.05, 0.95]");
  return out;
}

/// Bivariate Student-t on (log beta, log eta), used as a state-independent proposal.
struct LogTProposal {
  double mean_b = 0.0;
  double mean_e = 0.0;
  double l11 = 1.0;  // Cholesky factor of the scale matrix
  double l21 = 0.0;
  double l22 = 1.0;
  double df = 5.0;

  /// Moment fit to a set of draws, scale inflated by `inflate`.
  static LogTProposal fit(const PosteriorDraws& d, double inflate = 1.5, double df = 5.0) {
    if (d.size() < 3) throw UsageError("LogTProposal::fit needs at least three draws");
    double mb = 0, me = 0;
    for (const auto& p : d.draws) {
      mb += std::log(p.beta);
      me += std::log(p.eta);
    }
    const double n = static_cast<double>(d.size());
    mb /= n;
    me /= n;
    double sbb = 0, see = 0, sbe = 0;
    for (const auto& p : d.draws) {
      const double db = std::log(p.beta) - mb, de = std::log(p.eta) - me;
      sbb += db * db;
      see += de * de;
      sbe += db * de;
    }
    const double c = inflate * inflate / (n - 1.0);
    sbb = std::max(sbb * c, 1e-10);
    see = std::max(see * c, 1e-10);
    sbe *= c;
    LogTProposal q;
    q.mean_b = mb;
    q.mean_e = me;
    q.df = df;
    q.l11 = std::sqrt(sbb);
    q.l21 = sbe / q.l11;
    q.l22 = std::sqrt(std::max(see - q.l21 * q.l21, 1e-12 * see));
    return q;
  }

  /// Log density up to a constant at log-coordinates (xb, xe).
  double log_density(double xb, double xe) const {
    const double zb = (xb - mean_b) / l11;
    const double ze = (xe - mean_e - l21 * zb) / l22;
    return -0.5 * (df + 2.0) * std::log1p((zb * zb + ze * ze) / df);
  }
};

/// Independence Metropolis-Hastings with a fixed proposal.
///
/// Proposals never depend on the chain state, so two runs on the same stream
/// with slightly different targets see identical proposals and re-merge at the
/// next proposal both accept. Inside Monte-Carlo EM this makes the draws, and
/// hence the M-step, vary almost continuously with the hyper-means.
/// `cfg.step_init` and `cfg.adapt_target` are not used; `step_final` is 0.
template <class LogKernel>
PosteriorDraws run_independence_chain(const LogKernel& log_kernel, const LogTProposal& q, const McmcConfig& cfg,
                                      RngStream& rng) {
  cfg.validate();
  const double k0 = log_kernel(cfg.init);
  if (!std::isfinite(k0)) throw NumericalError("run_independence_chain: log kernel is not finite at the start");
  double xb = std::log(cfg.init.beta);
  double xe = std::log(cfg.init.eta);
  double cur = k0 + xb + xe - q.log_density(xb, xe);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(q.df);
  PosteriorDraws out;
  out.draws.reserve(cfg.n_p);
  std::size_t accepted = 0;
  const std::size_t collect = cfg.n_p * cfg.thin;
  const std::size_t total = cfg.burn_in + collect;
  for (std::size_t i = 0; i < total; ++i) {
    const double zb = normal(rng);
    const double ze = normal(rng);
    const double w = std::sqrt(q.df / chi2(rng));
    const double log_u = std::log(rng.uniform());
    const double yb = q.mean_b + w * q.l11 * zb;
    const double ye = q.mean_e + w * (q.l21 * zb + q.l22 * ze);
    const double ky = log_kernel(ComponentParams{std::exp(yb), std::exp(ye)});
    const double prop = std::isfinite(ky) ? ky + yb + ye - q.log_density(yb, ye) : -INFINITY;
    const bool accept = log_u < prop - cur;
    if (i >= cfg.burn_in) accepted += accept;
    if (accept) {
      xb = yb;
      xe = ye;
      cur = prop;
    }
    if (i >= cfg.burn_in && (i - cfg.burn_in + 1) % cfg.thin == 0)
      out.draws.push_back({std::exp(xb), std::exp(xe)});
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(collect);
  out.step_final = 0.0;
  if (out.acceptance_rate < 0.05 || out.acceptance_rate > 0.95)
    out.warnings.push_back("acceptance rate " + std::to_string(out.acceptance_rate) + " outside [0.05, 0.95]");
  return out;
}

struct PosteriorSummary {
  double mean_beta;
  double sd_beta;
  double mean_eta;
  double sd_eta;
};

inline PosteriorSummary posterior_summary(const PosteriorDraws& d) {
  if (d.size() < 2) throw UsageError("posterior_summary needs at least two draws");
  const auto b = d.betas();
  const auto e = d.etas();
  return {sample_mean(b), sample_sd(b), sample_mean(e), sample_sd(e)};
}

}  // namespace wbrel
