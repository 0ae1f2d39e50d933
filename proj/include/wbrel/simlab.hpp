#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "wbrel/curves.hpp"
#include "wbrel/dists.hpp"
#include "wbrel/errors.hpp"
#include "wbrel/mcem.hpp"
#include "wbrel/parallel.hpp"
#include "wbrel/rng.hpp"
#include "wbrel/sysmodel.hpp"

namespace wbrel {

/// Number of censored records for fraction p of n; halves round away from zero.
inline std::size_t censored_count(double p, std::size_t n) {
  return static_cast<std::size_t>(std::round(p * static_cast<double>(n)));
}

inline SystemSample generate_system_sample(std::span<const GeneratorSpec> specs, SystemKind kind, std::size_t n,
                                           RngStream& rng) {
  if (specs.empty()) throw UsageError("generate_system_sample: need at least one component");
  if (n < 1) throw UsageError("generate_system_sample: n must be at least 1");
  std::vector<LifetimeGenerator> gens;
  for (std::size_t j = 0; j < specs.size(); ++j) {
    try {
      gens.emplace_back(specs[j]);
    } catch (const Error& e) {
      throw DataError("component " + std::to_string(j + 1) + ": " + e.what());
    }
  }
  SystemSample s;
  s.kind = kind;
  s.k = static_cast<int>(specs.size());
  s.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = 0.0;
    int cause = 0;
    for (std::size_t j = 0; j < gens.size(); ++j) {
      const double x = gens[j](rng);
      const bool better = kind == SystemKind::series ? x < best : x > best;
      if (j == 0 || better) {
        best = x;
        cause = static_cast<int>(j) + 1;
      }
    }
    s.records.push_back({best, cause});
  }
  return s;
}

/// Type-I censoring at an empirical order statistic so that exactly
/// round(p n) records are censored. Censored records carry the threshold time.
inline ComponentSample generate_censored_sample(const GeneratorSpec& g, std::size_t n, double p, Side side,
                                                RngStream& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw UsageError("censor fraction must lie in [0, 1)");
  const std::size_t c = censored_count(p, n);
  if (c >= n) throw UsageError("round(p n) must be smaller than n");
  const auto x = sample(g, n, rng);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });

  ComponentSample out;
  out.side = side;
  out.records.reserve(n);
  for (double xi : x) out.records.push_back({xi, Status::exact});
  if (c == 0) return out;

  if (side == Side::right) {
    const double threshold = x[order[n - c - 1]];
    for (std::size_t r = n - c; r < n; ++r) out.records[order[r]] = {threshold, Status::censored};
  } else {
    const double threshold = x[order[c]];
    for (std::size_t r = 0; r < c; ++r) out.records[order[r]] = {threshold, Status::censored};
  }
  return out;
}

struct ScenarioSpec {
  GeneratorSpec generator;
  std::size_t n = 100;
  double censor_fraction = 0.0;
  Side side = Side::right;
  std::size_t replicates = 100;

  double true_mean() const noexcept { return generator.mean; }

  void validate() const {
    if (n < 2) throw UsageError("scenario: n must be at least 2");
    if (replicates < 1) throw UsageError("scenario: replicates must be at least 1");
    if (!(censor_fraction >= 0.0 && censor_fraction < 1.0)) throw UsageError("scenario: censor fraction in [0, 1)");
    if (censored_count(censor_fraction, n) >= n) throw UsageError("scenario: everything would be censored");
    LifetimeGenerator{generator};
  }
};

struct ScenarioResult {
  ScenarioSpec spec;
  std::vector<double> estimates;
  double bias = 0.0;
  double mse = 0.0;
  std::size_t n_failed = 0;
  std::size_t n_unconverged = 0;
  bool valid = true;
  std::vector<std::string> failures;
};

inline ScenarioResult summarize_estimates(const ScenarioSpec& spec, std::vector<double> estimates,
                                          std::size_t n_failed) {
  ScenarioResult res;
  res.spec = spec;
  res.n_failed = n_failed;
  res.estimates = std::move(estimates);
  if (res.estimates.empty()) {
    res.bias = res.mse = NAN;
    res.valid = false;
    return res;
  }
  double err = 0.0;
  double sq = 0.0;
  for (double e : res.estimates) {
    err += e - spec.true_mean();
    sq += (e - spec.true_mean()) * (e - spec.true_mean());
  }
  const double k = static_cast<double>(res.estimates.size());
  res.bias = err / k;
  res.mse = sq / k;
  res.valid = static_cast<double>(n_failed) <= 0.05 * static_cast<double>(spec.replicates);
  return res;
}

/// Replicate r draws its data from master.child(r).child("data") and fits on
/// master.child(r).child("fit").
inline ScenarioResult run_scenario(const ScenarioSpec& spec, const FitConfig& cfg, const RngStream& master,
                                   std::size_t workers = 1) {
  spec.validate();
  cfg.validate();
  struct Outcome {
    bool ok = false;
    bool converged = false;
    double estimate = 0.0;
    std::string error;
  };
  std::vector<Outcome> outcomes(spec.replicates);
  parallel_for(spec.replicates, workers, [&](std::size_t r) {
    const RngStream rep = master.child(static_cast<std::uint64_t>(r));
    try {
      RngStream data_rng = rep.child("data");
      const auto sample = generate_censored_sample(spec.generator, spec.n, spec.censor_fraction, spec.side, data_rng);
      const auto fit = fit_component(sample, cfg, rep.child("fit"));
      outcomes[r] = {true, fit.converged, mean_time_posterior(fit.draws).estimate, {}};
    } catch (const std::exception& e) {
      outcomes[r] = {false, false, 0.0, "replicate " + std::to_string(r) + ": " + e.what()};
    }
  });

  std::vector<double> estimates;
  std::size_t failed = 0;
  std::size_t unconverged = 0;
  std::vector<std::string> failures;
  for (const auto& o : outcomes) {
    if (o.ok) {
      estimates.push_back(o.estimate);
      unconverged += !o.converged;
    } else {
      ++failed;
      failures.push_back(o.error);
    }
  }
  auto res = summarize_estimates(spec, std::move(estimates), failed);
  res.n_unconverged = unconverged;
  res.failures = std::move(failures);
  return res;
}

struct GridDims {
  std::vector<Family> families{Family::weibull, Family::gamma, Family::lognormal};
  std::vector<double> means{2.0, 7.0};
  std::vector<double> censor_fractions{0.0, 0.2, 0.4};
  std::vector<std::size_t> sizes{30, 100, 1000};
  std::vector<Side> sides{Side::right, Side::left};
  double variance = 5.0;
  std::size_t replicates = 100;

  std::size_t cell_count() const {
    return families.size() * means.size() * censor_fractions.size() * sizes.size() * sides.size();
  }
};

/// Substream key of a scenario cell. The censoring side is deliberately not
/// part of the key: right and left cells see the same lifetimes.
inline std::string scenario_key(const ScenarioSpec& s) {
  return std::string(to_string(s.generator.family)) + "|" + std::to_string(s.generator.mean) + "|" +
         std::to_string(s.generator.variance) + "|" + std::to_string(s.censor_fraction) + "|" + std::to_string(s.n);
}

inline std::vector<ScenarioSpec> expand_grid(const GridDims& dims) {
  std::vector<ScenarioSpec> cells;
  for (Side side : dims.sides)
    for (Family fam : dims.families)
      for (double p : dims.censor_fractions)
        for (double mean : dims.means)
          for (std::size_t n : dims.sizes)
            cells.push_back({GeneratorSpec{fam, mean, dims.variance}, n, p, side, dims.replicates});
  std::stable_sort(cells.begin(), cells.end(), [](const ScenarioSpec& a, const ScenarioSpec& b) {
    return std::tuple(a.side, a.generator.family, a.censor_fraction, a.generator.mean, a.n) <
           std::tuple(b.side, b.generator.family, b.censor_fraction, b.generator.mean, b.n);
  });
  return cells;
}

/// Evaluates every cell of the cross product; cell errors stay in the table.
inline std::vector<ScenarioResult> run_grid(const GridDims& dims, const FitConfig& cfg, std::uint64_t seed,
                                            std::size_t workers = 1) {
  const auto cells = expand_grid(dims);
  if (cells.empty()) throw UsageError("run_grid: empty grid");
  cfg.validate();
  const RngStream root(seed);
  std::vector<ScenarioResult> out(cells.size());
  parallel_for(cells.size(), workers, [&](std::size_t i) {
    try {
      out[i] = run_scenario(cells[i], cfg, root.child(scenario_key(cells[i])));
    } catch (const std::exception& e) {
      ScenarioResult bad;
      bad.spec = cells[i];
      bad.bias = bad.mse = NAN;
      bad.n_failed = cells[i].replicates;
      bad.valid = false;
      bad.failures.push_back(e.what());
      out[i] = std::move(bad);
    }
  });
  return out;
}

}  // namespace wbrel
