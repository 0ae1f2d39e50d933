#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "wbrel/dists.hpp"
#include "wbrel/sampler.hpp"

using namespace wbrel;

namespace {

struct TwoGammas {
  MeanVarGamma a{2.0, 4.0};
  MeanVarGamma b{2.0, 4.0};
  double operator()(const ComponentParams& p) const { return gamma_mv_logpdf(a, p.beta) + gamma_mv_logpdf(b, p.eta); }
};

/// Flat in (log beta, log eta) on a box; zero outside.
struct FlatLogBox {
  double operator()(const ComponentParams& p) const {
    const double lb = std::log(p.beta), le = std::log(p.eta);
    if (std::abs(lb) > 3.0 || std::abs(le) > 3.0) return -INFINITY;
    return -lb - le;
  }
};

/// Batch-means standard error of the chain mean (20 batches).
double batch_means_se(const std::vector<double>& xs) {
  constexpr std::size_t batches = 20;
  const std::size_t len = xs.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += xs[b * len + i];
    means.push_back(s / len);
  }
  return sample_sd(means) / std::sqrt(static_cast<double>(batches));
}

}  // namespace

TEST(RunChain, ReproducesKnownGammaTargetMeans) {
  McmcConfig cfg;
  cfg.n_p = 5000;
  cfg.init = {1.0, 1.0};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    RngStream rng(seed);
    const auto d = run_chain(TwoGammas{}, cfg, rng);
    const auto b = d.betas(), e = d.etas();
    EXPECT_LT(std::abs(sample_mean(b) - 2.0), 4.0 * batch_means_se(b)) << "seed " << seed;
    EXPECT_LT(std::abs(sample_mean(e) - 2.0), 4.0 * batch_means_se(e)) << "seed " << seed;
    // Variance of an exponential with mean 2 is 4.
    EXPECT_NEAR(sample_sd(b) * sample_sd(b), 4.0, 1.0);
    EXPECT_GT(d.acceptance_rate, 0.15);
    EXPECT_LT(d.acceptance_rate, 0.45);
  }
}

TEST(RunChain, FlatTargetAcceptsAlmostEverything) {
  McmcConfig cfg;
  cfg.n_p = 2000;
  cfg.thin = 1;
  cfg.burn_in = 0;
  cfg.step_init = 0.01;
  RngStream rng(4);
  const auto d = run_chain(FlatLogBox{}, cfg, rng);
  EXPECT_GT(d.acceptance_rate, 0.99);
  EXPECT_FALSE(d.warnings.empty());  // > 0.95 is flagged as a diagnostic
}

TEST(RunChain, DeterministicPerSeed) {
  McmcConfig cfg;
  cfg.n_p = 300;
  cfg.burn_in = 500;
  RngStream a(77), b(77);
  const auto da = run_chain(TwoGammas{}, cfg, a);
  const auto db = run_chain(TwoGammas{}, cfg, b);
  EXPECT_EQ(da.draws, db.draws);
  EXPECT_EQ(da.step_final, db.step_final);
}

TEST(RunChain, ThinningKeepsEveryTthState) {
  McmcConfig thin;
  thin.n_p = 200;
  thin.thin = 7;
  thin.burn_in = 0;
  thin.step_init = 0.8;
  McmcConfig full = thin;
  full.thin = 1;
  full.n_p = thin.n_p * thin.thin;
  RngStream a(12), b(12);
  const auto dt = run_chain(TwoGammas{}, thin, a);
  const auto df = run_chain(TwoGammas{}, full, b);
  ASSERT_EQ(dt.size(), 200u);
  for (std::size_t i = 0; i < dt.size(); ++i) EXPECT_EQ(dt.draws[i], df.draws[(i + 1) * thin.thin - 1]);
}

TEST(RunChain, StepFrozenAfterBurnIn) {
  McmcConfig shorter;
  shorter.n_p = 100;
  shorter.burn_in = 2000;
  McmcConfig longer = shorter;
  longer.n_p = 400;
  RngStream a(31), b(31);
  const auto ds = run_chain(TwoGammas{}, shorter, a);
  const auto dl = run_chain(TwoGammas{}, longer, b);
  EXPECT_EQ(ds.step_final, dl.step_final);
  EXPECT_NE(ds.step_final, shorter.step_init);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(ds.draws[i], dl.draws[i]);
}

TEST(RunChain, DrawsArePositive) {
  McmcConfig cfg;
  cfg.n_p = 1000;
  cfg.thin = 1;
  cfg.burn_in = 100;
  cfg.step_init = 3.0;
  RngStream rng(2);
  for (const auto& p : run_chain(TwoGammas{}, cfg, rng).draws) EXPECT_TRUE(p.valid());
}

TEST(RunChain, RejectsNonFiniteStart) {
  McmcConfig cfg;
  cfg.init = {100.0, 100.0};
  RngStream rng(1);
  EXPECT_THROW(run_chain(FlatLogBox{}, cfg, rng), NumericalError);
}

TEST(RunChain, ValidatesConfig) {
  RngStream rng(1);
  McmcConfig cfg;
  cfg.n_p = 0;
  EXPECT_THROW(run_chain(TwoGammas{}, cfg, rng), UsageError);
  cfg = {};
  cfg.thin = 0;
  EXPECT_THROW(run_chain(TwoGammas{}, cfg, rng), UsageError);
  cfg = {};
  cfg.adapt_target = 1.0;
  EXPECT_THROW(run_chain(TwoGammas{}, cfg, rng), UsageError);
}

TEST(PosteriorSummary, KnownValues) {
  PosteriorDraws same;
  same.draws = {{1, 2}, {1, 2}, {1, 2}};
  const auto s = posterior_summary(same);
  EXPECT_EQ(s.mean_beta, 1.0);
  EXPECT_EQ(s.sd_beta, 0.0);
  EXPECT_EQ(s.mean_eta, 2.0);
  EXPECT_EQ(s.sd_eta, 0.0);

  PosteriorDraws two;
  two.draws = {{1, 1}, {3, 1}};
  const auto t = posterior_summary(two);
  EXPECT_DOUBLE_EQ(t.mean_beta, 2.0);
  EXPECT_DOUBLE_EQ(t.sd_beta, std::sqrt(2.0));

  PosteriorDraws one;
  one.draws = {{1, 1}};
  EXPECT_THROW(posterior_summary(one), UsageError);
}

TEST(Lag1Autocorrelation, SignsAndDegenerateInput) {
  EXPECT_LT(lag1_autocorrelation(std::vector<double>{1, -1, 1, -1, 1, -1}), -0.5);
  EXPECT_GT(lag1_autocorrelation(std::vector<double>{1, 2, 3, 4, 5, 6, 7}), 0.5);
  EXPECT_EQ(lag1_autocorrelation(std::vector<double>{2, 2, 2, 2}), 0.0);
}

TEST(IndependenceChain, ReproducesKnownGammaTargetMeans) {
  McmcConfig pilot;
  pilot.n_p = 1000;
  RngStream prng(11);
  const auto q = LogTProposal::fit(run_chain(TwoGammas{}, pilot, prng));
  McmcConfig cfg;
  cfg.n_p = 5000;
  cfg.burn_in = 100;
  cfg.thin = 2;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    RngStream rng(seed);
    const auto d = run_independence_chain(TwoGammas{}, q, cfg, rng);
    const auto b = d.betas(), e = d.etas();
    EXPECT_LT(std::abs(sample_mean(b) - 2.0), 4.0 * batch_means_se(b)) << "seed " << seed;
    EXPECT_LT(std::abs(sample_mean(e) - 2.0), 4.0 * batch_means_se(e)) << "seed " << seed;
    EXPECT_GT(d.acceptance_rate, 0.3);
  }
}

TEST(IndependenceChain, NearbyTargetsShareMostDraws) {
  McmcConfig pilot;
  RngStream prng(12);
  const auto q = LogTProposal::fit(run_chain(TwoGammas{}, pilot, prng));
  TwoGammas near;
  near.a.m = 2.001;
  McmcConfig cfg;
  cfg.burn_in = 100;
  RngStream a(5), b(5);
  const auto da = run_independence_chain(TwoGammas{}, q, cfg, a);
  const auto db = run_independence_chain(near, q, cfg, b);
  std::size_t same = 0;
  for (std::size_t i = 0; i < da.size(); ++i) same += da.draws[i] == db.draws[i];
  EXPECT_GT(same, da.size() * 95 / 100);
}

TEST(LogTProposal, FitRecoversLogMoments) {
  PosteriorDraws d;
  RngStream rng(8);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double a = z(rng), b = z(rng);
    d.draws.push_back({std::exp(1.0 + 0.5 * a), std::exp(-1.0 + 0.3 * a + 0.4 * b)});
  }
  const auto q = LogTProposal::fit(d, 1.0);
  EXPECT_NEAR(q.mean_b, 1.0, 0.02);
  EXPECT_NEAR(q.mean_e, -1.0, 0.02);
  EXPECT_NEAR(q.l11, 0.5, 0.01);
  EXPECT_NEAR(q.l21, 0.3, 0.01);
  EXPECT_NEAR(q.l22, 0.4, 0.01);
  EXPECT_THROW(LogTProposal::fit(PosteriorDraws{}), UsageError);
}
