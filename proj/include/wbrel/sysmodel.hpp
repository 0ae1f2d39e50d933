#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wbrel/dists.hpp"
#include "wbrel/errors.hpp"

namespace wbrel {

enum class SystemKind { series, parallel };
enum class Side { right, left };

inline std::string_view to_string(SystemKind k) { return k == SystemKind::series ? "series" : "parallel"; }
inline std::string_view to_string(Side s) { return s == Side::right ? "right" : "left"; }

inline SystemKind parse_kind(std::string_view s) {
  if (s == "series") return SystemKind::series;
  if (s == "parallel") return SystemKind::parallel;
  throw UsageError("system kind must be 'series' or 'parallel', got '" + std::string(s) + "'");
}

inline Side parse_side(std::string_view s) {
  if (s == "right") return Side::right;
  if (s == "left") return Side::left;
  throw UsageError("censoring side must be 'right' or 'left', got '" + std::string(s) + "'");
}

/// Series masking censors the non-failing components on the right, parallel on the left.
constexpr Side censoring_side(SystemKind k) noexcept { return k == SystemKind::series ? Side::right : Side::left; }

/// One masked system failure: time T and the 1-based index of the failing component.
struct SystemObservation {
  double t;
  int cause;
};

struct SystemSample {
  SystemKind kind = SystemKind::series;
  int k = 1;
  std::vector<SystemObservation> records;

  void validate() const {
    if (k < 1) throw UsageError("system must have at least one component");
    if (records.empty()) throw UsageError("system sample is empty");
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (!(r.t > 0.0) || !std::isfinite(r.t))
        throw DataError("record " + std::to_string(i) + ": failure time must be positive");
      if (r.cause < 1 || r.cause > k)
        throw DataError("record " + std::to_string(i) + ": cause " + std::to_string(r.cause) + " outside 1.." +
                        std::to_string(k));
    }
  }
};

enum class Status { exact, censored };

struct ComponentRecord {
  double t;
  Status status;
  friend bool operator==(const ComponentRecord&, const ComponentRecord&) = default;
};

struct ComponentSample {
  Side side = Side::right;
  std::vector<ComponentRecord> records;

  std::size_t exact_count() const {
    std::size_t c = 0;
    for (const auto& r : records) c += r.status == Status::exact;
    return c;
  }
  std::size_t censored_count() const { return records.size() - exact_count(); }
  double censored_fraction() const {
    return records.empty() ? 0.0 : static_cast<double>(censored_count()) / static_cast<double>(records.size());
  }
  /// Fits are allowed with zero exact events but the caller should flag them.
  bool all_censored() const { return exact_count() == 0; }
};

inline std::vector<ComponentSample> decompose(const SystemSample& s) {
  s.validate();
  std::vector<ComponentSample> out(static_cast<std::size_t>(s.k));
  for (int j = 0; j < s.k; ++j) {
    auto& c = out[static_cast<std::size_t>(j)];
    c.side = censoring_side(s.kind);
    c.records.reserve(s.records.size());
    for (const auto& r : s.records) c.records.push_back({r.t, r.cause == j + 1 ? Status::exact : Status::censored});
  }
  return out;
}

/// Log-likelihood contribution of one record.
inline double record_loglik(const ComponentRecord& r, Side side, const ComponentParams& p) {
  if (r.status == Status::exact) return weibull_logpdf(p, r.t);
  const double h = weibull_cumhazard(p, r.t);
  return side == Side::right ? -h : log1mexp(h);
}

inline double component_loglik(const ComponentSample& c, const ComponentParams& p) {
  require_valid(p);
  double sum = 0.0;
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    const double li = record_loglik(c.records[i], c.side, p);
    if (!std::isfinite(li))
      throw NumericalError("component_loglik: non-finite contribution at record " + std::to_string(i));
    sum += li;
  }
  return sum;
}

inline double system_loglik(const SystemSample& s, std::span<const ComponentParams> params) {
  if (params.size() != static_cast<std::size_t>(s.k))
    throw UsageError("system_loglik: expected " + std::to_string(s.k) + " parameter pairs, got " +
                     std::to_string(params.size()));
  s.validate();
  double sum = 0.0;
  for (int j = 0; j < s.k; ++j) {
    const auto& p = params[static_cast<std::size_t>(j)];
    require_valid(p);
    double part = 0.0;
    for (std::size_t i = 0; i < s.records.size(); ++i) {
      const auto& r = s.records[i];
      const ComponentRecord rec{r.t, r.cause == j + 1 ? Status::exact : Status::censored};
      const double li = record_loglik(rec, censoring_side(s.kind), p);
      if (!std::isfinite(li))
        throw NumericalError("system_loglik: non-finite contribution at record " + std::to_string(i) +
                             ", component " + std::to_string(j + 1));
      part += li;
    }
    sum += part;
  }
  return sum;
}

/// Independent gamma priors on shape and scale.
struct HyperParams {
  MeanVarGamma beta;
  MeanVarGamma eta;
};

inline double log_prior(const HyperParams& h, const ComponentParams& p) {
  return gamma_mv_logpdf(h.beta, p.beta) + gamma_mv_logpdf(h.eta, p.eta);
}

inline double log_posterior_kernel(const ComponentSample& c, const ComponentParams& p, const HyperParams& h) {
  return component_loglik(c, p) + log_prior(h, p);
}

/// The per-component log posterior prepared for repeated evaluation inside a chain.
///
/// Exact and censored log-times are cached; non-finite values come back as -inf
/// so that the sampler simply rejects such proposals.
class PosteriorKernel {
 public:
  PosteriorKernel(const ComponentSample& c, const HyperParams& h) : side_(c.side), hyper_(h) {
    for (const auto& r : c.records) {
      if (!(r.t > 0.0) || !std::isfinite(r.t)) throw DomainError("PosteriorKernel: record times must be positive");
      const double lt = std::log(r.t);
      if (r.status == Status::exact) {
        log_exact_.push_back(lt);
        sum_log_exact_ += lt;
      } else {
        log_censored_.push_back(lt);
      }
    }
    prior_beta_const_ = hyper_.beta.shape() * std::log(hyper_.beta.rate()) - log_gamma_fn(hyper_.beta.shape());
    prior_eta_const_ = hyper_.eta.shape() * std::log(hyper_.eta.rate()) - log_gamma_fn(hyper_.eta.shape());
  }

  const HyperParams& hyper() const noexcept { return hyper_; }

  double loglik(const ComponentParams& p) const {
    const double lb = std::log(p.beta);
    const double le = std::log(p.eta);
    const double d = static_cast<double>(log_exact_.size());
    double sum = d * (lb - p.beta * le) + (p.beta - 1.0) * sum_log_exact_;
    for (double lt : log_exact_) sum -= std::exp(p.beta * (lt - le));
    if (side_ == Side::right) {
      for (double lt : log_censored_) sum -= std::exp(p.beta * (lt - le));
    } else {
      for (double lt : log_censored_) sum += log1mexp(std::exp(p.beta * (lt - le)));
    }
    return sum;
  }

  double log_prior(const ComponentParams& p) const {
    const auto& hb = hyper_.beta;
    const auto& he = hyper_.eta;
    return (hb.shape() - 1.0) * std::log(p.beta) - hb.rate() * p.beta + prior_beta_const_ +
           (he.shape() - 1.0) * std::log(p.eta) - he.rate() * p.eta + prior_eta_const_;
  }

  double operator()(const ComponentParams& p) const {
    if (!p.valid()) return -INFINITY;
    const double v = loglik(p) + log_prior(p);
    return std::isnan(v) ? -INFINITY : v;
  }

 private:
  Side side_;
  HyperParams hyper_;
  std::vector<double> log_exact_;
  std::vector<double> log_censored_;
  double sum_log_exact_ = 0.0;
  double prior_beta_const_ = 0.0;
  double prior_eta_const_ = 0.0;
};

}  // namespace wbrel
