#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rldp/rate.hpp"

using namespace rldp;

namespace {

Domain unit_interval() { return Domain::interval(-1, 1); }
CoefficientField bm1() { return CoefficientField::constant(vec1(0), Mat::Identity(1, 1)); }

// Three-segment controls on a 0.01 grid; interior paths with sigma = 1 follow Y' = -alpha.
double brute_force_path_rate(double slope) {
  double best = kInf;
  for (int i = -100; i <= 100; ++i)
    for (int j = -100; j <= 100; ++j)
      for (int k = -100; k <= 100; ++k) {
        double a[3] = {i * 0.01, j * 0.01, k * 0.01};
        double y = 0.0, err = 0.0;
        for (int s = 0; s < 3; ++s) {
          y += -a[s] / 3.0;
          err = std::max(err, std::abs(y - slope * (s + 1) / 3.0));
        }
        if (err > 1e-9) continue;
        best = std::min(best, 0.5 * (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]) / 3.0);
      }
  return best;
}

// Single bang segment alpha = c on [0, tau] with c tau = r.
double brute_force_exit_cost(double r, double T) {
  double best = kInf;
  for (int i = 1; i <= 10000; ++i) {
    double tau = T * i / 10000.0, c = r / tau;
    best = std::min(best, 0.5 * c * c * tau);
  }
  return best;
}

}  // namespace

TEST(Rate, PathRateQuadrature) {
  TimeGrid g = TimeGrid::uniform(0, 1, 1000);
  Control z = Control::zero(g, 1);
  EXPECT_EQ(path_rate(z), 0.0);
  Control one = z;
  for (auto& v : one.values) v = vec1(1.0);
  EXPECT_NEAR(path_rate(one), 0.5, 1e-12);
  Control s = z;
  for (int k = 0; k < g.n_steps(); ++k) s.values[k] = vec1(std::sin(2 * std::numbers::pi * (g[k] + 0.5 * g.dt(k))));
  EXPECT_NEAR(path_rate(s), 0.25, 1e-4);
}

TEST(Rate, FixedPointPathCostsNothing) {
  Domain I = unit_interval();
  auto r = rate_of_path(I, ObliqueField::normal(I), bm1(), 0, vec1(0.2), ReferencePath::constant(vec1(0.2), 0, 1), 1,
                        1e-4);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.value, 0.0, 1e-8);
  for (const auto& v : r.optimizer.values) EXPECT_NEAR(v(0), 0.0, 1e-3);
}

TEST(Rate, InteriorLinearPath) {
  double oracle = brute_force_path_rate(0.5);
  EXPECT_NEAR(oracle, 0.125, 1e-12);
  Domain I = unit_interval();
  auto g = ReferencePath::linear(vec1(0), vec1(0.5), 0, 1);
  auto r = rate_of_path(I, ObliqueField::normal(I), bm1(), 0, vec1(0), g, 1, 1e-4);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.value, oracle, 0.05 * oracle);
}

TEST(Rate, MismatchedStartIsInfeasible) {
  Domain I = unit_interval();
  auto r = rate_of_path(I, ObliqueField::normal(I), bm1(), 0, vec1(0), ReferencePath::constant(vec1(0.3), 0, 1), 1,
                        1e-4);
  EXPECT_FALSE(r.feasible);
  EXPECT_TRUE(std::isinf(r.value));
}

TEST(Rate, BallAroundFreePathCostsNothing) {
  Domain D = Domain::disk(vec2(0, 0), 1.0);
  auto field = ObliqueField::normal(D);
  auto coeffs = CoefficientField::constant(vec2(1, 0), Mat::Identity(2, 2));
  TimeGrid g = TimeGrid::uniform(0, 1, 256);
  auto free = solve_reflected_ode(D, field, coeffs, Control::zero(g, 2), 0, vec2(0, 0), g);
  auto ev = EventSpec::ball(ReferencePath::from_path(free), 0.2);
  auto r = rate_of_event(D, field, coeffs, 0, vec2(0, 0), ev, 1, 1e-4);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.value, 0.0, 1e-10);
}

TEST(Rate, ExitCost) {
  double oracle = brute_force_exit_cost(0.5, 1.0);
  EXPECT_NEAR(oracle, 0.125, 1e-12);
  Domain I = unit_interval();
  auto ev = EventSpec::complements({ReferencePath::constant(vec1(0), 0, 1)}, {0.5});
  auto r = rate_of_event(I, ObliqueField::normal(I), bm1(), 0, vec1(0), ev, 1, 1e-4);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.value, oracle, 0.05 * oracle);
  EXPECT_LE(event_residual(I, ObliqueField::normal(I), bm1(), 0, vec1(0), ev, r.optimizer, 4), 1e-3);
}

TEST(Rate, NestedComplementsCostTheLargerEscape) {
  Domain I = unit_interval();
  auto f = ObliqueField::normal(I);
  auto g0 = ReferencePath::constant(vec1(0), 0, 1);
  auto small = rate_of_event(I, f, bm1(), 0, vec1(0), EventSpec::complements({g0}, {0.3}), 1, 1e-4);
  auto large = rate_of_event(I, f, bm1(), 0, vec1(0), EventSpec::complements({g0}, {0.5}), 1, 1e-4);
  auto both = rate_of_event(I, f, bm1(), 0, vec1(0), EventSpec::complements({g0, g0}, {0.3, 0.5}), 1, 1e-4);
  ASSERT_TRUE(both.feasible);
  EXPECT_NEAR(small.value, 0.045, 0.05 * 0.045);
  double expect = std::max(small.value, large.value);
  EXPECT_NEAR(both.value, expect, 0.1 * expect);
}

TEST(Rate, WeakStabilityZeroAmplitude) {
  Domain I = unit_interval();
  auto rep = weak_stability_check(I, ObliqueField::normal(I), bm1(), 0, vec1(0), 1, 0.0, dyadic_ladder(64), 512);
  for (double d : rep.sup_dists) EXPECT_EQ(d, 0.0);
}

TEST(Rate, WeakStabilityDecaysLikeInverseN) {
  Domain I = unit_interval();
  auto rep = weak_stability_check(I, ObliqueField::normal(I), bm1(), 0, vec1(0), 1, 1.0, dyadic_ladder(64));
  ASSERT_EQ(rep.n_values.size(), 7u);
  // unreflected: |int_0^t sin(ns) ds| <= 2/n
  for (size_t i = 0; i < rep.n_values.size(); ++i) EXPECT_LE(rep.sup_dists[i], 2.0 / rep.n_values[i] + 1e-3);
  EXPECT_TRUE(rep.eventually_decreasing);
  EXPECT_TRUE(rep.final_quarter);
  EXPECT_LE(rep.sup_dists.back() * 64, 2.0 + 0.1);
}

TEST(Rate, WeakStabilityOnDisk) {
  Domain D = Domain::disk(vec2(0, 0), 1.0);
  auto coeffs = CoefficientField::constant(vec2(1, 0), Mat::Identity(2, 2));
  auto rep = weak_stability_check(D, ObliqueField::normal(D), coeffs, 0, vec2(0, 0), 1, 1.0, dyadic_ladder(64));
  for (size_t i = 1; i < rep.n_values.size(); ++i)
    if (rep.n_values[i - 1] >= 4) {
      EXPECT_LE(rep.sup_dists[i], rep.sup_dists[i - 1] + 1e-12) << rep.n_values[i];
    }
  EXPECT_TRUE(rep.final_quarter);
}

TEST(Rate, DyadicLadder) { EXPECT_EQ(dyadic_ladder(64), (std::vector<int>{1, 2, 4, 8, 16, 32, 64})); }
