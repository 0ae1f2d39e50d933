#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <future>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wbrel/dists.hpp"
#include "wbrel/errors.hpp"
#include "wbrel/rng.hpp"
#include "wbrel/sampler.hpp"
#include "wbrel/sysmodel.hpp"

namespace wbrel {

struct FitConfig {
  double v_beta = 4.0;
  double v_eta = 4.0;
  double tol = 1e-3;
  std::size_t max_iter = 200;
  /// Chain run inside each EM iteration; warm-started, so a short burn-in.
  McmcConfig mcmc{.n_p = 1000, .burn_in = 1000, .thin = 10};
  /// Chain run once the hyper-means have settled.
  McmcConfig final_mcmc{.n_p = 1000, .burn_in = 10000, .thin = 10};
  /// Reuse one random stream for every EM iteration's chain, so successive
  /// M-steps differ by the change in hyper-means rather than by fresh
  /// Monte-Carlo noise that would keep the tolerance test from firing.
  bool common_random_numbers = true;
  /// After the first EM iteration, draw from an independence sampler whose
  /// proposal is fitted to the first iteration's draws (refitted when its
  /// acceptance drops below 0.1). The final chain is always the random walk.
  bool independence_em_chain = true;

  void set_v(double v) { v_beta = v_eta = v; }

  void validate() const {
    if (!(v_beta > 0.0) || !(v_eta > 0.0)) throw UsageError("fit: prior precision v must be positive");
    if (!(tol > 0.0)) throw UsageError("fit: tol must be positive");
    if (max_iter < 1) throw UsageError("fit: max_iter must be at least 1");
    mcmc.validate();
    final_mcmc.validate();
  }
};

struct EmTraceEntry {
  std::size_t iteration;
  double m_beta;
  double m_eta;
};

struct ComponentFit {
  double m_beta_hat = 0.0;
  double m_eta_hat = 0.0;
  PosteriorDraws draws;
  std::vector<EmTraceEntry> em_trace;
  bool converged = false;
  std::vector<std::string> warnings;
};

struct SystemFit {
  SystemKind kind = SystemKind::series;
  std::vector<ComponentFit> component_fits;
};

// ---------------------------------------------------------------- E and M steps

/// Mean gamma_mv log-density of a fixed draw set, as a function of the prior mean.
/// Reduces to the sufficient statistics mean(x) and mean(log x).
class GammaMeanObjective {
 public:
  GammaMeanObjective(std::span<const double> xs, double v) : v_(v) {
    if (xs.empty()) throw UsageError("m_step: no draws");
    for (double x : xs) {
      if (!(x > 0.0)) throw DomainError("m_step: draws must be positive");
      mean_x_ += x;
      mean_log_x_ += std::log(x);
    }
    mean_x_ /= static_cast<double>(xs.size());
    mean_log_x_ /= static_cast<double>(xs.size());
  }

  double operator()(double m) const {
    const double a = m * m / v_;
    const double b = m / v_;
    return (a - 1.0) * mean_log_x_ - b * mean_x_ + a * std::log(b) - log_gamma_fn(a);
  }

  /// d/d(log m) of operator().
  double slope(double m) const {
    const double a = m * m / v_;
    return (2.0 * a) * (mean_log_x_ + std::log(m / v_) - digamma_fn(a)) + m * (m - mean_x_) / v_;
  }

 private:
  double v_;
  double mean_x_ = 0.0;
  double mean_log_x_ = 0.0;
};

/// Q(m_beta, m_eta): expected log prior over the current draws. The data
/// likelihood does not depend on the hyper-means and is left out.
class EStepObjective {
 public:
  EStepObjective(const PosteriorDraws& d, double v_beta, double v_eta)
      : beta_(d.betas(), v_beta), eta_(d.etas(), v_eta) {}
  EStepObjective(const PosteriorDraws& d, double v) : EStepObjective(d, v, v) {}

  double beta_part(double m_beta) const { return beta_(m_beta); }
  double eta_part(double m_eta) const { return eta_(m_eta); }
  double operator()(double m_beta, double m_eta) const { return beta_(m_beta) + eta_(m_eta); }

 private:
  GammaMeanObjective beta_;
  GammaMeanObjective eta_;
};

inline EStepObjective e_step_objective(const PosteriorDraws& d, double v) { return EStepObjective(d, v); }

namespace detail {

template <class F>
double golden_section_max(const F& f, double a, double b, double tol) {
  constexpr double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// argmax over m of the mean gamma_mv log-density of `draws`.
///
/// A 161-point scan on log m over [1e-3, 1e3] brackets the peak by the sign
/// of the analytic slope, which still sees a peak narrower than the scan
/// spacing (v much smaller than m^2). Golden section then refines to 1e-6 in
/// log m. A slope that never turns negative (positive) pushes the upper
/// (lower) bound out by a factor 1e3, at most twice.
inline double m_step(std::span<const double> draws, double v) {
  if (!(v > 0.0)) throw UsageError("m_step: v must be positive");
  const GammaMeanObjective q(draws, v);
  auto f = [&q](double log_m) { return q(std::exp(log_m)); };
  double lo = std::log(1e-3);
  double hi = std::log(1e3);
  constexpr int points = 161;
  for (int expansion = 0; expansion <= 2; ++expansion) {
    const double h = (hi - lo) / (points - 1);
    std::vector<double> slopes(points);
    for (int i = 0; i < points; ++i) slopes[i] = q.slope(std::exp(lo + h * i));
    if (slopes.front() <= 0.0) {
      lo -= std::log(1e3);
      continue;
    }
    if (slopes.back() >= 0.0) {
      hi += std::log(1e3);
      continue;
    }
    double best = 0.0, best_val = -INFINITY;
    for (int i = 0; i + 1 < points; ++i) {
      if (!(slopes[i] > 0.0 && slopes[i + 1] <= 0.0)) continue;
      const double x = detail::golden_section_max(f, lo + h * i, lo + h * (i + 1), 1e-6);
      const double val = f(x);
      if (val > best_val) {
        best_val = val;
        best = x;
      }
    }
    return std::exp(best);
  }
  throw ConvergenceError("m_step: optimum pinned at the search bound");
}

// ---------------------------------------------------------------- fitting

inline double mean_record_time(const ComponentSample& c) {
  double s = 0.0;
  for (const auto& r : c.records) s += r.t;
  return s / static_cast<double>(c.records.size());
}

/// Monte-Carlo EM over the prior means, then a final long chain.
inline ComponentFit fit_component(const ComponentSample& c, const FitConfig& cfg, const RngStream& rng) {
  cfg.validate();
  if (c.records.empty()) throw UsageError("fit_component: empty sample");

  ComponentFit fit;
  if (c.all_censored()) fit.warnings.push_back("sample has no exact events; posterior rests on the prior");

  double m_beta = 1.0;
  double m_eta = mean_record_time(c);
  ComponentParams init{1.0, m_eta};
  double step = cfg.mcmc.step_init;
  fit.em_trace.push_back({0, m_beta, m_eta});

  const RngStream em_root = rng.child("em");
  std::optional<LogTProposal> proposal;
  std::size_t proposal_generation = 0;
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    const PosteriorKernel kernel(c, HyperParams{{m_beta, cfg.v_beta}, {m_eta, cfg.v_eta}});
    McmcConfig mc = cfg.mcmc;
    mc.init = init;
    mc.step_init = step;
    PosteriorDraws d;
    if (proposal) {
      RngStream chain_rng = cfg.common_random_numbers ? em_root.child(proposal_generation) : em_root.child(it);
      d = run_independence_chain(kernel, *proposal, mc, chain_rng);
    } else {
      RngStream chain_rng = cfg.common_random_numbers ? em_root : em_root.child(it);
      d = run_chain(kernel, mc, chain_rng);
      step = d.step_final;
    }
    if (cfg.independence_em_chain && (!proposal || d.acceptance_rate < 0.1)) {
      proposal = LogTProposal::fit(d);
      ++proposal_generation;
    }

    const double next_beta = m_step(d.betas(), cfg.v_beta);
    const double next_eta = m_step(d.etas(), cfg.v_eta);
    init = d.mean();
    fit.em_trace.push_back({it, next_beta, next_eta});

    const bool settled = std::abs(next_beta - m_beta) < cfg.tol && std::abs(next_eta - m_eta) < cfg.tol;
    m_beta = next_beta;
    m_eta = next_eta;
    if (settled) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged)
    fit.warnings.push_back("hyper-means did not settle within " + std::to_string(cfg.max_iter) + " iterations");

  fit.m_beta_hat = m_beta;
  fit.m_eta_hat = m_eta;
  const PosteriorKernel kernel(c, HyperParams{{m_beta, cfg.v_beta}, {m_eta, cfg.v_eta}});
  McmcConfig fc = cfg.final_mcmc;
  fc.init = init;
  fc.step_init = step;
  RngStream final_rng = rng.child("final");
  fit.draws = run_chain(kernel, fc, final_rng);
  for (const auto& w : fit.draws.warnings) fit.warnings.push_back("final chain: " + w);
  return fit;
}

/// Fits every component on its own substream `rng.child(j)`; results do not
/// depend on whether components run sequentially or concurrently.
inline SystemFit fit_system(const SystemSample& s, const FitConfig& cfg, const RngStream& rng,
                            bool concurrent = true) {
  const auto comps = decompose(s);
  SystemFit out;
  out.kind = s.kind;
  out.component_fits.resize(comps.size());
  std::vector<std::exception_ptr> errors(comps.size());

  auto run_one = [&](std::size_t j) {
    try {
      out.component_fits[j] = fit_component(comps[j], cfg, rng.child(static_cast<std::uint64_t>(j)));
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };
  if (concurrent && comps.size() > 1) {
    std::vector<std::future<void>> jobs;
    for (std::size_t j = 0; j < comps.size(); ++j) jobs.push_back(std::async(std::launch::async, run_one, j));
    for (auto& job : jobs) job.get();
  } else {
    for (std::size_t j = 0; j < comps.size(); ++j) run_one(j);
  }

  std::string message;
  for (std::size_t j = 0; j < errors.size(); ++j) {
    if (!errors[j]) continue;
    try {
      std::rethrow_exception(errors[j]);
    } catch (const std::exception& e) {
      message += "component " + std::to_string(j + 1) + ": " + e.what() + "; ";
    }
  }
  if (!message.empty()) throw NumericalError("fit_system failed: " + message);
  return out;
}

}  // namespace wbrel
