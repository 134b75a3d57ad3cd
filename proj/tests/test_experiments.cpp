#include <cmath>

#include <gtest/gtest.h>

#include "lscv/experiments.hpp"

namespace {

using lscv::ExperimentConfig;
using lscv::ModelId;

ExperimentConfig small(ModelId m, std::size_t n = 120, std::size_t reps = 3) {
  ExperimentConfig c;
  c.model = m;
  c.n = n;
  c.reps = reps;
  c.grid = lscv::BandwidthGrid::log_spaced(0.1, 0.8, 6);
  c.base_seed = 11;
  c.info_mc = 5000;
  return c;
}

TEST(Replication, Deterministic) {
  const auto cfg = small(ModelId::A);
  const auto a = lscv::run_replication(cfg, 2);
  const auto b = lscv::run_replication(cfg, 2);
  ASSERT_TRUE(a.ok);
  EXPECT_EQ(a.cv_values, b.cv_values);
  EXPECT_EQ(a.d_A_values, b.d_A_values);
  EXPECT_EQ(a.seed.seed, 11u);
  EXPECT_EQ(a.seed.stream, 3u);
}

TEST(Replication, OracleFieldsAreConsistent) {
  const auto r = lscv::run_replication(small(ModelId::A), 0);
  ASSERT_TRUE(r.ok);
  EXPECT_LE(r.d_A_star, r.d_A_hat);
  for (double d : r.d_A_values) EXPECT_GE(d, r.d_A_star);
  ASSERT_TRUE(r.h_0.has_value());
  ASSERT_TRUE(r.d_A_h0.has_value());
  EXPECT_GE(*r.d_A_h0, r.d_A_star);
}

TEST(Replication, SeriesMatchesSeedPolicy) {
  const auto cfg = small(ModelId::B);
  const lscv::StudyContext ctx(cfg);
  const auto r = ctx.run(1);
  ASSERT_TRUE(r.ok);
  const auto xs = lscv::simulate(ctx.source_spec(), ctx.source_curve(), cfg.n, {11, 2}).values;
  const auto sel = lscv::select_bandwidth(ctx.objective(), xs, ctx.kernel(), ctx.weight(), cfg.grid,
                                          ctx.fit_spec().theta_box);
  EXPECT_EQ(sel.cv_values, r.cv_values);
}

TEST(Study, WorkersDoNotChangeResults) {
  auto cfg = small(ModelId::C, 100, 4);
  const auto a = lscv::run_study(cfg);
  cfg.workers = 3;
  const auto b = lscv::run_study(cfg);
  ASSERT_EQ(a.replications.size(), b.replications.size());
  for (std::size_t i = 0; i < a.replications.size(); ++i) {
    EXPECT_EQ(a.replications[i].cv_values, b.replications[i].cv_values);
    EXPECT_EQ(a.replications[i].d_A_values, b.replications[i].d_A_values);
  }
  EXPECT_EQ(a.summary.successes + a.summary.failures, 4u);
}

TEST(Study, ModelDHasNoPlugin) {
  const auto res = lscv::run_study(small(ModelId::D, 100, 2));
  EXPECT_FALSE(res.summary.plugin.has_value());
  EXPECT_FALSE(res.summary.d_A_h0.has_value());
  EXPECT_EQ(res.summary.replications, 2u);
}

TEST(Study, MisspecifiedFitsTvAr1) {
  auto cfg = small(ModelId::B);
  cfg.mode = lscv::StudyMode::MisspecifiedToTvAR;
  const lscv::StudyContext ctx(cfg);
  EXPECT_EQ(ctx.fit_spec().family, lscv::Family::TvAR);
  EXPECT_FALSE(ctx.plugin().has_value());
  const auto t = ctx.target()(0.25);
  EXPECT_NEAR(t[0], 0.9 / 1.81, 1e-12);
  cfg.model = ModelId::A;
  EXPECT_THROW(lscv::StudyContext{cfg}, lscv::ConfigError);
}

TEST(Study, RobustnessNeedsNonGaussianLaw) {
  auto cfg = small(ModelId::A, 100, 2);
  EXPECT_THROW(lscv::run_robustness(cfg), lscv::ConfigError);
  cfg.innovation = lscv::Innovation::Uniform;
  const auto res = lscv::run_robustness(cfg);
  EXPECT_EQ(res.summary.replications, 2u);
}

TEST(Study, SummaryUsesSuccessesOnly) {
  const auto cfg = small(ModelId::A, 100, 3);
  const lscv::StudyContext ctx(cfg);
  std::vector<lscv::ReplicationResult> reps = {ctx.run(0), ctx.run(1), {}};
  reps[2].error = "synthetic";
  const auto s = lscv::summarize(ctx, reps);
  EXPECT_EQ(s.successes, 2u);
  EXPECT_EQ(s.failures, 1u);
  std::size_t total = 0;
  for (auto c : s.h_hat_histogram.counts) total += c;
  EXPECT_EQ(total, 2u);
  ASSERT_TRUE(s.h_hat_stats.has_value());
  EXPECT_EQ(s.h_hat_stats->q50, 0.5 * (reps[0].h_hat + reps[1].h_hat));
}

TEST(Study, InvalidConfigRejected) {
  auto cfg = small(ModelId::A);
  cfg.n = 1;
  EXPECT_THROW(lscv::run_study(cfg), lscv::ConfigError);
  cfg = small(ModelId::A);
  cfg.weight_a = 0.9;
  cfg.weight_b = 0.1;
  EXPECT_THROW(lscv::run_study(cfg), lscv::ConfigError);
}

}  // namespace
