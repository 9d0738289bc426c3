#include <gtest/gtest.h>

#include <cmath>

#include "rldp/ldp.hpp"

using namespace rldp;

namespace {

ExperimentConfig base_1d(double b, double sigma) {
  Domain I = Domain::interval(-1, 1);
  ExperimentConfig cfg(I, ObliqueField::normal(I), CoefficientField::constant(vec1(b), sigma * Mat::Identity(1, 1)),
                       vec1(0));
  cfg.n_samples = 4000;
  cfg.n_steps = 200;
  cfg.seed = 5;
  cfg.grid.cells = 100;
  cfg.rate_opts.segments = 32;
  cfg.rate_opts.max_segments = 64;
  cfg.dp_steps = 4;
  cfg.weak_n_max = 16;
  cfg.goodness_controls = 8;
  return cfg;
}

}  // namespace

TEST(Ldp, DeterministicPathInTube) {
  auto cfg = base_1d(0.5, 0.0);
  cfg.ball = EventSpec::ball(ReferencePath::linear(vec1(0), vec1(0.5), 0, 1), 0.1, "on_path");
  auto rep = run_upper_bound_experiment(cfg);
  for (const auto& e : rep.ladder) {
    EXPECT_EQ(e.estimate.p_hat, 1.0);
    EXPECT_EQ(e.log_rate.value, 0.0);
  }
  EXPECT_NEAR(rep.lambda_value, 0.0, 1e-10);
  EXPECT_EQ(rep.verdict, Verdict::consistent);
}

TEST(Ldp, ExitFreeTubeHasZeroRate) {
  auto cfg = base_1d(0.0, 1.0);
  cfg.ball = EventSpec::ball(ReferencePath::constant(vec1(0), 0, 1), 0.5, "stay");
  auto rep = run_upper_bound_experiment(cfg);
  EXPECT_NEAR(rep.lambda_value, 0.0, 1e-10);
  ASSERT_EQ(rep.ladder.size(), 3u);
  for (size_t i = 1; i < rep.ladder.size(); ++i)
    EXPECT_LE(rep.ladder[i].log_rate.value, rep.ladder[i - 1].log_rate.value);
  EXPECT_LE(rep.ladder.back().log_rate.value, 0.02);
  EXPECT_TRUE(rep.monotone);
  std::string why;
  for (const auto& d : rep.details) why += d + "; ";
  EXPECT_EQ(rep.verdict, Verdict::consistent) << why;
}

TEST(Ldp, ComplementOfStartingTubeIsSure) {
  auto cfg = base_1d(0.0, 1.0);
  cfg.complements = EventSpec::complements({ReferencePath::constant(vec1(0.8), 0, 1)}, {0.3}, "away");
  auto rep = run_lower_bound_experiment(cfg);
  EXPECT_NEAR(rep.lambda_value, 0.0, 1e-10);
  for (const auto& e : rep.ladder) EXPECT_NEAR(e.log_rate.value, 0.0, 1e-12);
  EXPECT_EQ(rep.verdict, Verdict::consistent);
}

TEST(Ldp, SingleComplementApproachesClassicalRate) {
  auto cfg = base_1d(0.0, 1.0);
  cfg.n_samples = 20000;
  cfg.n_steps = 500;
  cfg.complements = EventSpec::complements({ReferencePath::constant(vec1(0), 0, 1)}, {0.5}, "exit");
  auto rep = run_lower_bound_experiment(cfg);
  EXPECT_NEAR(rep.lambda_value, 0.125, 0.05 * 0.125);
  EXPECT_TRUE(std::isfinite(rep.dp_value));
  EXPECT_GE(rep.smallest_eps_rate, rep.lambda_value - rep.slack.total());
  EXPECT_NE(rep.verdict, Verdict::inconsistent);
}

TEST(Ldp, SlackLedgerItemized) {
  SlackLedger s{0.01, 0.02, 0.03, 0.04};
  EXPECT_DOUBLE_EQ(s.total(), 0.1);
}

TEST(Ldp, CapIdentityBoundaryCases) {
  auto cfg = base_1d(0.0, 1.0);
  cfg.eps_ladder = {0.5};
  cfg.grid.cells = 80;
  cfg.ball = EventSpec::ball(ReferencePath::linear(vec1(0), vec1(1), 0, 1), 0.5, "drifting");
  auto rep = cap_identity_check(cfg, {0.0, 3.0}, 0.1);
  ASSERT_EQ(rep.cases.size(), 2u);
  EXPECT_EQ(rep.cases[0].capped, 0.0);
  EXPECT_TRUE(rep.cases[0].pass);
  EXPECT_NEAR(rep.cases[1].capped, rep.uncapped, 0.1 * rep.uncapped);
  EXPECT_TRUE(rep.pass);
}

TEST(Ldp, GoodnessAtLevelZeroStaysOnFreePath) {
  auto cfg = base_1d(0.3, 1.0);
  cfg.goodness_level = 0.0;
  auto rep = goodness_proxy(cfg);
  EXPECT_EQ(rep.max_action, 0.0);
  EXPECT_LE(rep.max_distance_from_free, 1e-12);
}

TEST(Ldp, GoodnessEnvelopeBoundsHolderQuotient) {
  Domain D = Domain::disk(vec2(0, 0), 1.0);
  ExperimentConfig cfg(D, ObliqueField::normal_plus_tangent(D, 0.5),
                       CoefficientField::constant(vec2(1, 0), Mat::Identity(2, 2)), vec2(0, 0));
  cfg.goodness_controls = 16;
  cfg.weak_n_max = 32;
  auto rep = goodness_proxy(cfg);
  EXPECT_LE(rep.max_action, 1.0 + 1e-12);
  EXPECT_LE(rep.max_holder, rep.envelope);
  EXPECT_TRUE(rep.weak.eventually_decreasing);
  EXPECT_TRUE(rep.pass);
}

TEST(Ldp, ConfigValidationNamesField) {
  auto cfg = base_1d(0.0, 1.0);
  cfg.eps_ladder = {0.25, 0.5};
  try {
    validate_config(cfg);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("eps_ladder"), std::string::npos);
  }
  auto neg = base_1d(0.0, 1.0);
  neg.rel_slack = -0.1;
  EXPECT_THROW(validate_config(neg), ConfigError);
}

TEST(Ldp, DefaultDpMagnitudes) {
  auto cfg = base_1d(0.0, 1.0);
  cfg.complements = EventSpec::complements({ReferencePath::constant(vec1(0), 0, 1)}, {0.5}, "exit");
  auto m = default_dp_magnitudes(cfg);
  ASSERT_FALSE(m.empty());
  for (size_t i = 1; i < m.size(); ++i) EXPECT_GT(m[i], m[i - 1]);
  EXPECT_NEAR(m.back(), 1.0, 1e-12);
}

TEST(Ldp, VerdictNames) {
  EXPECT_EQ(to_string(Verdict::consistent), "consistent");
  EXPECT_EQ(to_string(Verdict::inconsistent), "inconsistent");
  EXPECT_EQ(to_string(Verdict::inconclusive), "inconclusive");
}
