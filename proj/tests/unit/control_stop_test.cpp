#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "rldp/control_stop.hpp"

using namespace rldp;

namespace {

// 1D additive state rule x + alpha h, kept exact for dyadic data.
DiscreteProblem additive_problem(int n_nodes, double h, std::vector<double> mags) {
  DiscreteProblem p;
  std::vector<double> nodes;
  for (int k = 0; k < n_nodes; ++k) nodes.push_back(k * h);
  p.grid = TimeGrid(nodes);
  p.control_set = default_control_set(1, mags);
  p.state_rule = [h](int, const Vec& x, const Vec& a) { return vec1(x(0) + a(0) * h); };
  return p;
}

// inf over all control sequences and all stopping nodes, enumerated leaf by leaf
double brute_inf_inf(const DiscreteProblem& p, const Obstacle& phi, int k0, const Vec& x) {
  int n = p.grid.n_steps();
  double best = kInf;
  std::function<void(int, const Vec&, double)> rec = [&](int k, const Vec& y, double cost) {
    best = std::min(best, cost + phi(p.grid[k], y));
    if (k == n) return;
    for (const auto& a : p.control_set) rec(k + 1, p.state_rule(k, y, a), cost + 0.5 * a.squaredNorm() * p.grid.dt(k));
  };
  rec(k0, x, 0.0);
  return best;
}

// inf over controls of sup over stopping nodes
double brute_inf_sup(const DiscreteProblem& p, const Obstacle& psi, int k0, const Vec& x) {
  int n = p.grid.n_steps();
  double best = kInf;
  std::function<void(int, const Vec&, double, double)> rec = [&](int k, const Vec& y, double cost, double sup) {
    sup = std::max(sup, cost + psi(p.grid[k], y));
    if (k == n) {
      best = std::min(best, sup);
      return;
    }
    for (const auto& a : p.control_set)
      rec(k + 1, p.state_rule(k, y, a), cost + 0.5 * a.squaredNorm() * p.grid.dt(k), sup);
  };
  rec(k0, x, 0.0, -kInf);
  return best;
}

// value on dyadic points in 1/16 steps, bounded by 4
Obstacle random_dyadic_obstacle(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coef(-32, 32);
  int c0 = coef(rng), c1 = coef(rng), c2 = coef(rng);
  return [c0, c1, c2](double t, const Vec& x) {
    double v = c0 / 16.0 + c1 / 16.0 * t + c2 / 16.0 * x(0) * x(0);
    return std::clamp(std::round(v * 16) / 16, -4.0, 4.0);
  };
}

}  // namespace

TEST(ControlStop, DefaultControlSet) {
  auto s = default_control_set(1, {1.0, 0.5});
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(s.front()(0), -1.0);
  EXPECT_EQ(s[2](0), 0.0);
  EXPECT_EQ(default_control_set(2, {1.0}).size(), 9u);
}

TEST(ControlStop, ZeroObstacleInfSup) {
  auto p = additive_problem(4, 0.25, {1.0});
  p.obstacles = {[](double, const Vec&) { return 0.0; }};
  EXPECT_EQ(value_inf_sup(p, 0, vec1(0)), 0.0);
}

TEST(ControlStop, ConstantObstacleInfSup) {
  auto p = additive_problem(4, 0.25, {1.0});
  p.obstacles = {[](double, const Vec&) { return 0.7; }};
  EXPECT_EQ(value_inf_sup(p, 0, vec1(0.1)), 0.7);
}

TEST(ControlStop, TubeObstacleTwoNodes) {
  auto p = additive_problem(2, 1.0, {0.5});
  auto ev = EventSpec::ball(ReferencePath::constant(vec1(0), 0, 1), 0.3);
  p.obstacles = {tube_indicator(ev, 0, 1.0, true)};
  // hand enumeration: alpha = 0 stays at 0, stop anywhere costs 0; alpha = +-0.5 pays 1/8 and leaves
  EXPECT_EQ(value_inf_sup(p, 0, vec1(0)), 0.0);
  EXPECT_EQ(brute_inf_sup(p, p.obstacles[0], 0, vec1(0)), 0.0);
}

TEST(ControlStop, InfSupMatchesEnumeration) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = additive_problem(4, 0.5, {1.0});
    p.obstacles = {random_dyadic_obstacle(rng)};
    EXPECT_EQ(value_inf_sup(p, 0, vec1(0.5)), brute_inf_sup(p, p.obstacles[0], 0, vec1(0.5))) << trial;
  }
}

TEST(ControlStop, InfInfConstant) {
  auto p = additive_problem(3, 0.5, {1.0});
  p.obstacles = {[](double, const Vec&) { return 2.5; }};
  EXPECT_EQ(value_inf_inf(p, 0, vec1(0)), 2.5);
}

TEST(ControlStop, InfInfStopsOffTube) {
  auto p = additive_problem(3, 0.5, {1.0});
  auto ev = EventSpec::ball(ReferencePath::constant(vec1(0), 0, 1), 0.3);
  p.obstacles = {tube_indicator(ev, 0, 5.0, false)};
  EXPECT_EQ(value_inf_inf(p, 0, vec1(0.6)), 0.0);
}

TEST(ControlStop, InfInfThreeNodesMatchesEnumeration) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 25; ++trial) {
    auto p = additive_problem(3, 0.5, {1.0, 0.5});
    double a = u(rng), b = u(rng), c = u(rng);
    Obstacle phi = [a, b, c](double t, const Vec& x) { return a + b * t + c * std::sin(3 * x(0)); };
    p.obstacles = {phi};
    EXPECT_NEAR(value_inf_inf(p, 0, vec1(0.1)), brute_inf_inf(p, phi, 0, vec1(0.1)), 1e-14) << trial;
  }
}

TEST(ControlStop, InfInfThreeNodesExactOnDyadicData) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 25; ++trial) {
    auto p = additive_problem(3, 0.5, {1.0, 0.5});
    p.obstacles = {random_dyadic_obstacle(rng)};
    EXPECT_EQ(value_inf_inf(p, 0, vec1(0.5)), brute_inf_inf(p, p.obstacles[0], 0, vec1(0.5))) << trial;
  }
}

TEST(ControlStop, MultiStopZeroObstacles) {
  auto p = additive_problem(3, 0.5, {1.0});
  p.obstacles.assign(2, [](double, const Vec&) { return 0.0; });
  EXPECT_EQ(multi_stop_value(p, 0, vec1(0)), 0.0);
  EXPECT_EQ(reduced_value(p, 0, vec1(0)), 0.0);
}

TEST(ControlStop, SingleObstacleReducesToInfInf) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = additive_problem(3, 0.5, {1.0});
    p.obstacles = {random_dyadic_obstacle(rng)};
    double inf_inf = value_inf_inf(p, 0, vec1(0));
    EXPECT_EQ(multi_stop_value(p, 0, vec1(0)), inf_inf);
    EXPECT_EQ(reduced_value(p, 0, vec1(0)), inf_inf);
  }
}

TEST(ControlStop, ReductionIdentityRandomInstances) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 100; ++trial) {
    int N = 2 + trial % 2;
    auto p = additive_problem(3, 0.5, {1.0});
    for (int i = 0; i < N; ++i) p.obstacles.push_back(random_dyadic_obstacle(rng));
    EXPECT_EQ(reduced_value(p, 0, vec1(0.5)), multi_stop_value(p, 0, vec1(0.5))) << "instance " << trial;
  }
}

TEST(ControlStop, ReducedValuesBySubsetAreMonotone) {
  std::mt19937_64 rng(8);
  auto p = additive_problem(3, 0.5, {1.0});
  for (int i = 0; i < 3; ++i)
    p.obstacles.push_back([o = random_dyadic_obstacle(rng)](double t, const Vec& x) { return std::abs(o(t, x)); });
  auto by = reduced_values_by_subset(p, 0, vec1(0));
  EXPECT_EQ(by.size(), 7u);
  // nonnegative obstacles: adding a stopping time never lowers the value
  for (auto [J, v] : by)
    for (auto [K, w] : by)
      if ((J & K) == J) {
        EXPECT_LE(v, w);
      }
}

TEST(ControlStop, EnumerationGuard) {
  auto p = additive_problem(12, 0.1, {1.0, 0.5});
  p.obstacles.assign(3, [](double, const Vec&) { return 0.0; });
  EXPECT_THROW(multi_stop_value(p, 0, vec1(0), 1e6), StateSpaceTooLarge);
}

TEST(ControlStop, ObstacleBoundEnforced) {
  auto p = additive_problem(3, 0.5, {1.0});
  p.obstacle_bound = 10;
  p.obstacles = {[](double, const Vec&) { return 11.0; }};
  EXPECT_THROW(value_inf_inf(p, 0, vec1(0)), Error);
}

TEST(ControlStop, ReflectedStateRuleStaysInDomain) {
  Domain I = Domain::interval(-1, 1);
  TimeGrid g = TimeGrid::uniform(0, 1, 4);
  auto rule = make_reflected_state_rule(I, ObliqueField::normal(I),
                                        CoefficientField::constant(vec1(0), Mat::Identity(1, 1)), g, 8);
  Vec y = vec1(0.9);
  for (int k = 0; k < 4; ++k) {
    y = rule(k, y, vec1(-4.0));
    EXPECT_LE(y(0), 1.0);
  }
  EXPECT_EQ(y(0), 1.0);
}
