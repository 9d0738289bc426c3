#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rldp/reflect.hpp"

using namespace rldp;

namespace {

Domain unit_disk() { return Domain::disk(vec2(0, 0), 1.0); }

CoefficientField drift2(double bx) { return CoefficientField::constant(vec2(bx, 0), Mat::Zero(2, 2)); }

Control constant_control(const TimeGrid& g, Vec a) {
  Control c = Control::zero(g, static_cast<int>(a.size()));
  for (auto& v : c.values) v = a;
  return c;
}

Control sine_control(const TimeGrid& g) {
  Control c = Control::zero(g, 1);
  for (int k = 0; k < g.n_steps(); ++k) c.values[k] = vec1(std::sin(2 * std::numbers::pi * g[k]));
  return c;
}

// Smallest lambda >= 0 with |p - lambda g|^2 = 1.
double root_on_unit_circle(const Vec& p, const Vec& g) {
  double a = g.squaredNorm(), b = -2 * p.dot(g), c = p.squaredNorm() - 1;
  return (-b - std::sqrt(b * b - 4 * a * c)) / (2 * a);
}

}  // namespace

TEST(Reflect, RadialPushback) {
  Domain D = unit_disk();
  auto r = reflect_step(D, ObliqueField::normal(D), vec2(1.2, 0));
  EXPECT_NEAR((r.q - vec2(1, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((r.dz - vec2(0.2, 0)).norm(), 0.0, 1e-12);
}

TEST(Reflect, InsidePointUnchanged) {
  Domain D = unit_disk();
  auto r = reflect_step(D, ObliqueField::normal(D), vec2(0.3, -0.4));
  EXPECT_EQ(r.q, vec2(0.3, -0.4));
  EXPECT_EQ(r.dz.norm(), 0.0);
}

TEST(Reflect, ObliquePushbackMatchesRootFind) {
  Domain D = unit_disk();
  auto field = ObliqueField::normal_plus_tangent(D, 0.5);
  Vec p = vec2(1.1, 0);
  Vec g0 = field(vec2(1, 0));
  EXPECT_NEAR((g0 - vec2(1, 0.5)).norm(), 0.0, 1e-12);
  double lambda0 = root_on_unit_circle(p, g0);
  Vec q0 = p - lambda0 * g0;

  auto r = reflect_step(D, field, p);
  EXPECT_NEAR(r.q.norm(), 1.0, 1e-9);
  EXPECT_NEAR((r.q - q0).norm(), 0.0, 1e-2);
  // the converged contact point is the exact root for gamma at that point
  Vec gq = field(D.project_to_boundary(r.q));
  double lambda = root_on_unit_circle(p, gq);
  EXPECT_NEAR((r.q - (p - lambda * gq)).norm(), 0.0, 1e-9);
  EXPECT_NEAR((r.dz - lambda * gq).norm(), 0.0, 1e-9);
}

TEST(Reflect, ZeroDataGivesConstantPath) {
  Domain D = unit_disk();
  TimeGrid g = TimeGrid::uniform(0, 1, 100);
  auto path = solve_reflected_ode(D, ObliqueField::normal(D), drift2(0), Control::zero(g, 2), 0, vec2(0.3, 0.2), g);
  for (const auto& y : path.points) EXPECT_EQ(y, vec2(0.3, 0.2));
  EXPECT_EQ(path.total_variation, 0.0);
}

TEST(Reflect, ConstantDriftAgainstWall) {
  Domain D = unit_disk();
  auto field = ObliqueField::normal(D);
  TimeGrid fine = TimeGrid::uniform(0, 1, 1 << 18);
  auto ref = solve_reflected_ode(D, field, drift2(2), Control::zero(fine, 2), 0, vec2(0, 0), fine);
  EXPECT_NEAR(ref.total_variation, 1.0, 1e-4);
  EXPECT_NEAR((ref.at(0.5) - vec2(1, 0)).norm(), 0.0, 1e-4);
  EXPECT_NEAR((ref.points.back() - vec2(1, 0)).norm(), 0.0, 1e-12);

  for (int n : {64, 256, 1024}) {
    TimeGrid g = TimeGrid::uniform(0, 1, n);
    auto p = solve_reflected_ode(D, field, drift2(2), Control::zero(g, 2), 0, vec2(0, 0), g);
    EXPECT_NEAR(p.total_variation, ref.total_variation, 2.0 / n + 1e-9) << n;
    EXPECT_LE((p.at(0.25) - ref.at(0.25)).norm(), 1e-9);
    EXPECT_NEAR((p.points.back() - vec2(1, 0)).norm(), 0.0, 1e-12);
  }
}

TEST(Reflect, StraightLineReachesWallAtHorizon) {
  Domain I = Domain::interval(-1, 1);
  TimeGrid g = TimeGrid::uniform(0, 1, 1000);
  auto coeffs = CoefficientField::constant(vec1(0), Mat::Identity(1, 1));
  auto p = solve_reflected_ode(I, ObliqueField::normal(I), coeffs, constant_control(g, vec1(-1)), 0, vec1(0), g);
  for (int k = 0; k <= g.n_steps(); ++k) EXPECT_NEAR(p.points[k](0), g[k], 1e-12);
  EXPECT_LE(p.total_variation, 1e-12);
}

TEST(Reflect, PicardConstantMapConvergesAtOnce) {
  Domain D = unit_disk();
  TimeGrid g = TimeGrid::uniform(0, 1, 64);
  auto res = solve_skorokhod_picard(D, ObliqueField::normal(D), drift2(0), Control::zero(g, 2), 0, vec2(0.1, 0), g,
                                    1e-10);
  ASSERT_FALSE(res.windows.empty());
  for (const auto& w : res.windows) EXPECT_LE(w.iterations, 1);
  for (const auto& y : res.path.points) EXPECT_EQ(y, vec2(0.1, 0));
}

TEST(Reflect, PicardAgreesWithStepper) {
  Domain D = unit_disk();
  auto field = ObliqueField::normal(D);
  TimeGrid g = TimeGrid::uniform(0, 1, 512);
  double tol = 1e-9;
  auto ode = solve_reflected_ode(D, field, drift2(2), Control::zero(g, 2), 0, vec2(0, 0), g);
  auto pic = solve_skorokhod_picard(D, field, drift2(2), Control::zero(g, 2), 0, vec2(0, 0), g, tol);
  EXPECT_LE(sup_distance(ode, pic.path), 3 * tol);
  EXPECT_LE(pic.max_ratio, 0.6);
}

TEST(Reflect, PicardRatiosOnObliqueControlledCase) {
  Domain D = unit_disk();
  auto field = certify(D, ObliqueField::normal_plus_tangent(D, 0.5));
  auto coeffs = CoefficientField::constant(vec2(1.5, 0.5), Mat::Identity(2, 2));
  TimeGrid g = TimeGrid::uniform(0, 1, 256);
  Control c = Control::zero(g, 2);
  for (int k = 0; k < g.n_steps(); ++k) c.values[k] = vec2(std::sin(7 * g[k]), -std::cos(3 * g[k]));
  auto ode = solve_reflected_ode(D, field, coeffs, c, 0, vec2(0.2, -0.3), g);
  auto pic = solve_skorokhod_picard(D, field, coeffs, c, 0, vec2(0.2, -0.3), g, 1e-10);
  EXPECT_LE(pic.max_ratio, 0.6);
  EXPECT_LE(sup_distance(ode, pic.path), 3e-10);
}

TEST(Reflect, FlowDefectVanishesWithoutData) {
  Domain D = unit_disk();
  TimeGrid g = TimeGrid::uniform(0, 1, 64);
  auto rep = flow_check(D, ObliqueField::normal(D), drift2(0), Control::zero(g, 2), 0, vec2(0.5, 0), g, 0.3);
  EXPECT_EQ(rep.defect, 0.0);
  EXPECT_GT(rep.matched_nodes, 0);
}

TEST(Reflect, FlowDefectDriftCase) {
  Domain D = unit_disk();
  TimeGrid g = TimeGrid::uniform(0, 1, 1 << 14);
  auto rep = flow_check(D, ObliqueField::normal(D), drift2(2), Control::zero(g, 2), 0, vec2(0, 0), g, 0.25);
  EXPECT_LE(rep.defect, 1e-6);
}

TEST(Reflect, FlowDefectOrderOnControlledCase) {
  Domain I = Domain::interval(-1, 1);
  auto coeffs = CoefficientField::constant(vec1(0.8), Mat::Identity(1, 1));
  std::vector<double> defects;
  for (int n : {256, 1024, 4096}) {
    TimeGrid g = TimeGrid::uniform(0, 1, n);
    defects.push_back(flow_check(I, ObliqueField::normal(I), coeffs, sine_control(g), 0, vec1(0.5), g, 0.3).defect);
  }
  EXPECT_LE(defects[1], defects[0] + 1e-14);
  EXPECT_LE(defects[2], defects[1] + 1e-14);
  if (defects[2] > 1e-14) {
    double order = std::log(defects[1] / defects[2]) / std::log(4.0);
    EXPECT_GE(order, 0.9);
  }
}

TEST(Reflect, PathCheckOnObliqueDisk) {
  Domain D = unit_disk();
  auto field = ObliqueField::normal_plus_tangent(D, 0.5);
  TimeGrid g = TimeGrid::uniform(0, 1, 2000);
  auto p = solve_reflected_ode(D, field, drift2(3), Control::zero(g, 2), 0, vec2(0, 0.2), g);
  auto chk = check_path(D, field, p);
  EXPECT_GE(chk.min_signed_distance, -1e-8);
  EXPECT_LE(chk.interior_variation, 1e-12);
  EXPECT_LE(chk.max_angle, 1e-6);
  EXPECT_TRUE(chk.variation_consistent);
}

TEST(Reflect, HolderQuotientStableUnderRefinement) {
  Domain D = unit_disk();
  auto field = ObliqueField::normal(D);
  auto coeffs = CoefficientField::constant(vec2(2, 1), Mat::Identity(2, 2));
  std::vector<double> q;
  for (int n : {512, 1024}) {
    TimeGrid g = TimeGrid::uniform(0, 1, n);
    Control c = Control::zero(g, 2);
    for (int k = 0; k < n; ++k) c.values[k] = vec2(std::cos(5 * g[k]), 1.0);
    q.push_back(holder_half_quotient(solve_reflected_ode(D, field, coeffs, c, 0, vec2(0, 0), g)));
  }
  EXPECT_GT(q[0], 0.0);
  EXPECT_LE(std::max(q[0], q[1]) / std::min(q[0], q[1]), 2.0);
}

TEST(Reflect, InvalidStartRejected) {
  Domain D = unit_disk();
  TimeGrid g = TimeGrid::uniform(0, 1, 10);
  EXPECT_THROW(solve_reflected_ode(D, ObliqueField::normal(D), drift2(0), Control::zero(g, 2), 0, vec2(2, 0), g),
               Error);
}
