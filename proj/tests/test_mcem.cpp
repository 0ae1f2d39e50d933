#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "test_support.hpp"
#include "wbrel/curves.hpp"
#include "wbrel/mcem.hpp"
#include "wbrel/simlab.hpp"

using namespace wbrel;

namespace {

PosteriorDraws draws_from(const std::vector<double>& betas, const std::vector<double>& etas) {
  PosteriorDraws d;
  for (std::size_t i = 0; i < betas.size(); ++i) d.draws.push_back({betas[i], etas[i]});
  return d;
}

double brute_mean_logpdf(const std::vector<double>& xs, double m, double v) {
  double s = 0.0;
  for (double x : xs) s += gamma_mv_logpdf({m, v}, x);
  return s / static_cast<double>(xs.size());
}

std::vector<double> positive_sample(std::uint64_t seed, std::size_t n, double mean, double var) {
  RngStream rng(seed);
  return sample({Family::gamma, mean, var}, n, rng);
}

ComponentSample exact_sample(std::vector<double> ts) {
  ComponentSample c{Side::right, {}};
  for (double t : ts) c.records.push_back({t, Status::exact});
  return c;
}

void expect_same_fit(const ComponentFit& a, const ComponentFit& b) {
  EXPECT_EQ(a.m_beta_hat, b.m_beta_hat);
  EXPECT_EQ(a.m_eta_hat, b.m_eta_hat);
  EXPECT_EQ(a.draws.draws, b.draws.draws);
  EXPECT_EQ(a.converged, b.converged);
  ASSERT_EQ(a.em_trace.size(), b.em_trace.size());
  for (std::size_t i = 0; i < a.em_trace.size(); ++i) {
    EXPECT_EQ(a.em_trace[i].m_beta, b.em_trace[i].m_beta);
    EXPECT_EQ(a.em_trace[i].m_eta, b.em_trace[i].m_eta);
  }
}

}  // namespace

TEST(EStep, SingleDrawIsGammaLogDensityAtThatDraw) {
  const auto q = e_step_objective(draws_from({1.0}, {1.0}), 1.0);
  for (double m : {0.5, 1.0, 2.5}) {
    EXPECT_NEAR(q.beta_part(m), gamma_mv_logpdf({m, 1.0}, 1.0), 1e-12);
    EXPECT_NEAR(q.eta_part(m), gamma_mv_logpdf({m, 1.0}, 1.0), 1e-12);
  }
}

TEST(EStep, SeparableAndEqualToBruteForceMean) {
  const auto b = positive_sample(1, 50, 2.0, 0.5);
  const auto e = positive_sample(2, 50, 3.0, 1.0);
  const EStepObjective q(draws_from(b, e), 4.0);
  for (double mb : {0.3, 1.7, 4.0})
    for (double me : {0.8, 3.0, 9.0}) {
      EXPECT_NEAR(q(mb, me), q.beta_part(mb) + q.eta_part(me), 1e-12);
      EXPECT_NEAR(q(mb, me), brute_mean_logpdf(b, mb, 4.0) + brute_mean_logpdf(e, me, 4.0), 1e-10);
    }
}

TEST(MStep, ConcentratedDrawsRecoverTheirValue) {
  for (double c : {2.0, 3.0, 40.0, 700.0}) {
    const std::vector<double> xs(10, c);
    EXPECT_NEAR(m_step(xs, 0.01), c, 1e-2) << c;
  }
}

TEST(MStep, MatchesDenseGridSearch) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const auto xs = positive_sample(seed, 200, 1.5 + seed, 2.0);
    constexpr int points = 100000;
    const double lo = std::log(1e-3), hi = std::log(1e3), h = (hi - lo) / (points - 1);
    double best = lo, best_val = -INFINITY;
    for (int i = 0; i < points; ++i) {
      const double val = brute_mean_logpdf(xs, std::exp(lo + h * i), 4.0);
      if (val > best_val) {
        best_val = val;
        best = lo + h * i;
      }
    }
    EXPECT_NEAR(std::log(m_step(xs, 4.0)), best, h) << "seed " << seed;
  }
}

TEST(MStep, ScalesWithDraws) {
  const auto xs = positive_sample(6, 100, 2.0, 1.0);
  const double base = m_step(xs, 4.0);
  for (double lambda : {0.01, 0.3, 7.0, 50.0}) {
    std::vector<double> scaled;
    for (double x : xs) scaled.push_back(lambda * x);
    EXPECT_NEAR(m_step(scaled, 4.0 * lambda * lambda) / (lambda * base), 1.0, 1e-5) << lambda;
  }
}

TEST(MStep, RejectsBadInput) {
  EXPECT_THROW(m_step(std::vector<double>{}, 4.0), UsageError);
  EXPECT_THROW(m_step(std::vector<double>{1.0, -1.0}, 4.0), DomainError);
  EXPECT_THROW(m_step(std::vector<double>{1.0}, 0.0), UsageError);
}

TEST(FitComponent, TinyExactSampleConvergesAndMatchesQuadrature) {
  const auto c = exact_sample({0.7, 1.3, 1.9, 2.2, 3.4});
  const auto fit = fit_component(c, FitConfig{}, RngStream(21));
  ASSERT_TRUE(fit.converged);
  EXPECT_LE(fit.em_trace.size(), 201u);
  EXPECT_TRUE(std::isfinite(fit.m_beta_hat) && fit.m_beta_hat > 0);
  EXPECT_TRUE(std::isfinite(fit.m_eta_hat) && fit.m_eta_hat > 0);
  const auto& last = fit.em_trace.back();
  const auto& prev = fit.em_trace[fit.em_trace.size() - 2];
  EXPECT_LT(std::abs(last.m_beta - prev.m_beta), 1e-3);
  EXPECT_LT(std::abs(last.m_eta - prev.m_eta), 1e-3);

  const auto q = oracle::posterior_quadrature(c, HyperParams{{fit.m_beta_hat, 4.0}, {fit.m_eta_hat, 4.0}});
  const auto m = fit.draws.mean();
  EXPECT_NEAR(m.beta / q.mean_beta, 1.0, 0.05);
  EXPECT_NEAR(m.eta / q.mean_eta, 1.0, 0.05);
}

TEST(FitComponent, CensoredTinySamplesMatchQuadrature) {
  struct Case {
    GeneratorSpec g;
    std::size_t n;
    double p;
    Side side;
  };
  const Case cases[] = {{{Family::weibull, 2.0, 4.0}, 8, 0.25, Side::right},
                        {{Family::lognormal, 2.0, 3.0}, 10, 0.3, Side::left}};
  std::uint64_t seed = 30;
  for (const auto& k : cases) {
    RngStream data(seed++);
    const auto c = generate_censored_sample(k.g, k.n, k.p, k.side, data);
    const auto fit = fit_component(c, FitConfig{}, RngStream(seed++));
    const auto q = oracle::posterior_quadrature(c, HyperParams{{fit.m_beta_hat, 4.0}, {fit.m_eta_hat, 4.0}});
    const auto m = fit.draws.mean();
    EXPECT_NEAR(m.beta / q.mean_beta, 1.0, 0.05);
    EXPECT_NEAR(m.eta / q.mean_eta, 1.0, 0.05);
  }
}

TEST(FitComponent, LargeSampleMeanTimeIsAccurate) {
  RngStream data(40);
  // Weibull with beta = 1, eta = 2 has mean 2 and variance 4.
  const auto c = generate_censored_sample({Family::weibull, 2.0, 4.0}, 1000, 0.0, Side::right, data);
  const auto fit = fit_component(c, FitConfig{}, RngStream(41));
  EXPECT_TRUE(fit.converged);
  // Three standard errors of a mean of 1000 draws with sd 2.
  EXPECT_NEAR(mean_time_posterior(fit.draws).estimate, 2.0, 0.19);
}

TEST(FitComponent, EmStableUnderLargerChain) {
  RngStream data(50);
  const auto c = generate_censored_sample({Family::weibull, 2.0, 5.0}, 300, 0.2, Side::right, data);
  const FitConfig cfg;
  const auto fit = fit_component(c, cfg, RngStream(51));
  ASSERT_TRUE(fit.converged);
  const PosteriorKernel kernel(c, HyperParams{{fit.m_beta_hat, cfg.v_beta}, {fit.m_eta_hat, cfg.v_eta}});
  McmcConfig mc = cfg.mcmc;
  mc.n_p *= 4;
  mc.init = fit.draws.mean();
  RngStream rng(52);
  const auto d = run_chain(kernel, mc, rng);
  EXPECT_LT(std::abs(m_step(d.betas(), cfg.v_beta) - fit.m_beta_hat), 5 * cfg.tol);
  EXPECT_LT(std::abs(m_step(d.etas(), cfg.v_eta) - fit.m_eta_hat), 5 * cfg.tol);
}

TEST(FitComponent, Deterministic) {
  RngStream data(60);
  const auto c = generate_censored_sample({Family::gamma, 3.0, 2.0}, 40, 0.2, Side::left, data);
  const auto cfg = testing_support::quick_fit_config();
  expect_same_fit(fit_component(c, cfg, RngStream(61)), fit_component(c, cfg, RngStream(61)));
}

TEST(FitComponent, IterationCapReportsInsteadOfThrowing) {
  auto cfg = testing_support::quick_fit_config();
  cfg.max_iter = 1;
  const auto c = exact_sample({5.0, 6.0, 7.0, 8.0});
  ComponentFit fit;
  ASSERT_NO_THROW(fit = fit_component(c, cfg, RngStream(70)));
  EXPECT_FALSE(fit.converged);
  EXPECT_EQ(fit.em_trace.size(), 2u);
  EXPECT_FALSE(fit.warnings.empty());
  EXPECT_EQ(fit.draws.size(), cfg.final_mcmc.n_p);
}

TEST(FitComponent, FreshStreamsStillProduceValidFit) {
  auto cfg = testing_support::quick_fit_config();
  cfg.common_random_numbers = false;
  cfg.independence_em_chain = false;
  const auto fit = fit_component(exact_sample({0.5, 1.0, 1.5, 2.0, 2.5, 3.0}), cfg, RngStream(71));
  EXPECT_GT(fit.m_beta_hat, 0.0);
  EXPECT_GT(fit.m_eta_hat, 0.0);
  EXPECT_EQ(fit.draws.size(), cfg.final_mcmc.n_p);
}

TEST(FitComponent, AllCensoredSampleWarns) {
  ComponentSample c{Side::right, {{1.0, Status::censored}, {2.0, Status::censored}}};
  const auto fit = fit_component(c, testing_support::quick_fit_config(), RngStream(72));
  EXPECT_FALSE(fit.warnings.empty());
  EXPECT_GT(fit.m_eta_hat, 0.0);
}

TEST(FitComponent, RejectsBadConfig) {
  FitConfig cfg;
  cfg.tol = 0.0;
  EXPECT_THROW(fit_component(exact_sample({1.0}), cfg, RngStream(1)), UsageError);
  cfg = FitConfig{};
  cfg.set_v(-1.0);
  EXPECT_THROW(fit_component(exact_sample({1.0}), cfg, RngStream(1)), UsageError);
  EXPECT_THROW(fit_component(ComponentSample{}, FitConfig{}, RngStream(1)), UsageError);
}

// Reading a small record as "failed at or before t" rather than "failed at t"
// multiplies the likelihood by t (e^u - 1) / (beta u), u = (t / eta)^beta,
// which falls as eta grows. The posterior on eta must shift down.
TEST(FitComponent, LeftCensoringShiftsScaleDown) {
  ComponentSample left{Side::left, {}}, exact{Side::left, {}};
  for (double t : {0.3, 0.5, 0.6}) {
    left.records.push_back({t, Status::censored});
    exact.records.push_back({t, Status::exact});
  }
  for (double t : {1.5, 2.0, 2.4, 3.1, 2.7}) {
    left.records.push_back({t, Status::exact});
    exact.records.push_back({t, Status::exact});
  }
  const HyperParams h{{2.0, 4.0}, {2.0, 4.0}};
  EXPECT_LT(oracle::posterior_quadrature(left, h).mean_eta, oracle::posterior_quadrature(exact, h).mean_eta);
  const FitConfig cfg;
  EXPECT_LT(fit_component(left, cfg, RngStream(80)).draws.mean().eta,
            fit_component(exact, cfg, RngStream(80)).draws.mean().eta);
}

TEST(FitSystem, SingleComponentReducesToFitComponent) {
  RngStream data(90);
  const GeneratorSpec g[] = {{Family::weibull, 2.0, 1.0}};
  const auto s = generate_system_sample(g, SystemKind::series, 30, data);
  const auto cfg = testing_support::quick_fit_config();
  const RngStream master(91);
  const auto sys = fit_system(s, cfg, master);
  ASSERT_EQ(sys.component_fits.size(), 1u);
  expect_same_fit(sys.component_fits[0], fit_component(decompose(s)[0], cfg, master.child(0)));
}

TEST(FitSystem, ConcurrentMatchesSequential) {
  RngStream data(92);
  const GeneratorSpec g[] = {{Family::weibull, 2.0, 4.0}, {Family::gamma, 2.0, 1.0}, {Family::lognormal, 3.0, 2.0}};
  const auto s = generate_system_sample(g, SystemKind::parallel, 60, data);
  const auto cfg = testing_support::quick_fit_config();
  const auto a = fit_system(s, cfg, RngStream(93), true);
  const auto b = fit_system(s, cfg, RngStream(93), false);
  ASSERT_EQ(a.component_fits.size(), 3u);
  EXPECT_EQ(a.kind, SystemKind::parallel);
  for (std::size_t j = 0; j < 3; ++j) {
    expect_same_fit(a.component_fits[j], b.component_fits[j]);
    EXPECT_GT(a.component_fits[j].m_beta_hat, 0.0);
    EXPECT_GT(a.component_fits[j].m_eta_hat, 0.0);
  }
}

TEST(MStep, SlopeMatchesFiniteDifference) {
  const auto xs = positive_sample(7, 30, 2.0, 1.0);
  for (double v : {0.01, 4.0, 100.0}) {
    const GammaMeanObjective q(xs, v);
    for (double m : {0.01, 0.7, 2.0, 30.0}) {
      const double h = 1e-6;
      const double fd = (q(m * std::exp(h)) - q(m * std::exp(-h))) / (2 * h);
      EXPECT_NEAR(q.slope(m), fd, 1e-4 * std::max(1.0, std::abs(fd))) << v << " " << m;
    }
  }
}
