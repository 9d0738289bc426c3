#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rldp/geometry.hpp"

using namespace rldp;

namespace {

// Dense boundary sampling of the ellipse (2,1): distance and argmin.
std::pair<double, Vec> ellipse_nearest(const Vec& x, int n = 2000000) {
  double best = kInf;
  Vec arg = vec2(0, 0);
  for (int i = 0; i < n; ++i) {
    double th = 2 * std::numbers::pi * i / n;
    Vec y = vec2(2 * std::cos(th), std::sin(th));
    double dist = (x - y).norm();
    if (dist < best) {
      best = dist;
      arg = y;
    }
  }
  return {best, arg};
}

Domain unit_disk() { return Domain::disk(vec2(0, 0), 1.0); }

}  // namespace

TEST(Geometry, DiskSignedDistance) {
  Domain D = unit_disk();
  EXPECT_NEAR(D.signed_distance(vec2(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(D.signed_distance(vec2(1, 0)), 0.0, 1e-12);
  EXPECT_LT(D.signed_distance(vec2(1.5, 0)), 0.0);
}

TEST(Geometry, EllipseCenterDistanceMatchesSampling) {
  Domain E = Domain::ellipse(vec2(0, 0), 2.0, 1.0);
  auto [oracle, arg] = ellipse_nearest(vec2(0, 0));
  EXPECT_NEAR(oracle, 1.0, 1e-9);
  EXPECT_NEAR(E.signed_distance(vec2(0, 0)), oracle, 1e-8);
}

TEST(Geometry, EllipseDistanceAtGenericPoints) {
  Domain E = Domain::ellipse(vec2(0, 0), 2.0, 1.0);
  for (Vec x : {vec2(0.7, 0.3), vec2(-1.2, 0.1), vec2(2.5, 0.8), vec2(0.1, -1.4)}) {
    double oracle = ellipse_nearest(x, 400000).first;
    double sd = E.signed_distance(x);
    EXPECT_NEAR(std::abs(sd), oracle, 1e-6) << x.transpose();
    EXPECT_EQ(sd > 0, E.level(x) < 0);
  }
}

TEST(Geometry, Normals) {
  Domain D = unit_disk();
  Vec n = D.normal(vec2(1, 0));
  EXPECT_NEAR(n(0), 1.0, 1e-12);
  EXPECT_NEAR(n(1), 0.0, 1e-12);

  Domain I = Domain::interval(-1, 1);
  EXPECT_NEAR(I.normal(vec1(-1))(0), -1.0, 1e-12);
  EXPECT_NEAR(I.normal(vec1(1))(0), 1.0, 1e-12);

  Domain E = Domain::ellipse(vec2(0, 0), 2.0, 1.0);
  Vec ne = E.normal(vec2(2, 0));
  EXPECT_NEAR(ne(0), 1.0, 1e-9);
  EXPECT_NEAR(ne(1), 0.0, 1e-9);
  // normalized gradient of x^2/4 + y^2 - 1
  Vec p = vec2(2 * std::cos(0.6), std::sin(0.6));
  Vec g = vec2(p(0) / 2, 2 * p(1));
  Vec expect = g / g.norm();
  EXPECT_NEAR((E.normal(p) - expect).norm(), 0.0, 1e-8);
}

TEST(Geometry, Projection) {
  Domain D = unit_disk();
  EXPECT_NEAR((D.project_to_boundary(vec2(2, 0)) - vec2(1, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((D.project_to_boundary(vec2(0.5, 0)) - vec2(1, 0)).norm(), 0.0, 1e-12);

  Domain E = Domain::ellipse(vec2(0, 0), 2.0, 1.0);
  auto [dist, arg] = ellipse_nearest(vec2(3, 0));
  EXPECT_NEAR((arg - vec2(2, 0)).norm(), 0.0, 1e-5);
  EXPECT_NEAR((E.project_to_boundary(vec2(3, 0)) - vec2(2, 0)).norm(), 0.0, 1e-8);
  Vec x = vec2(1.5, 1.2);
  auto [d2, arg2] = ellipse_nearest(x);
  EXPECT_NEAR((E.project_to_boundary(x) - arg2).norm(), 0.0, 1e-4);
}

TEST(Geometry, SignedDistanceIsOneLipschitz) {
  Domain E = Domain::ellipse(vec2(0.2, -0.1), 1.5, 0.8);
  auto pts = E.sample_interior(200);
  for (size_t i = 1; i < pts.size(); ++i) {
    double lhs = std::abs(E.signed_distance(pts[i]) - E.signed_distance(pts[i - 1]));
    EXPECT_LE(lhs, (pts[i] - pts[i - 1]).norm() + 1e-9);
  }
}

TEST(Geometry, ObliqueNormalField) {
  Domain D = unit_disk();
  auto rep = validate_oblique(D, ObliqueField::normal(D), 4096);
  EXPECT_NEAR(rep.min_dot, 1.0, 1e-9);
}

TEST(Geometry, ObliqueTangentialPartIsOrthogonal) {
  Domain D = unit_disk();
  auto rep = validate_oblique(D, ObliqueField::normal_plus_tangent(D, 0.5), 4096);
  EXPECT_NEAR(rep.min_dot, 1.0, 1e-9);
  EXPECT_GT(rep.lipschitz_est, 0.0);
}

TEST(Geometry, ConstantFieldFailsOnDisk) {
  Domain D = unit_disk();
  auto field = ObliqueField::constant(vec2(1, 0));
  try {
    validate_oblique(D, field, 4096);
    FAIL() << "expected ObliqueViolation";
  } catch (const ObliqueViolation& e) {
    EXPECT_LE(e.min_dot, 0.0);
    EXPECT_NEAR(e.where(0), -1.0, 1e-2);
  }
  EXPECT_THROW(certify(D, field, 4096), ObliqueViolation);
}

TEST(Geometry, CertifySetsLowerBound) {
  Domain E = Domain::ellipse(vec2(0, 0), 2.0, 1.0);
  auto f = certify(E, ObliqueField::normal_plus_tangent(E, 0.3), 2048);
  EXPECT_NEAR(f.c0(), 1.0, 1e-9);
}

TEST(Geometry, CoefficientLipschitzAndEpsFamily) {
  Mat B(2, 2);
  B << 0, 1, -1, 0;
  Mat S = Mat::Identity(2, 2);
  auto c = CoefficientField::linear(B, vec2(0, 0), S).with_eps_family({vec2(1, 0), 0.5});
  auto rep = check_coefficients(c, unit_disk(), 1.0, {0.5, 0.35, 0.25});
  EXPECT_TRUE(rep.lipschitz_ok);
  ASSERT_EQ(rep.eps_sup_gaps.size(), 3u);
  EXPECT_TRUE(rep.eps_monotone);
  EXPECT_GT(rep.eps_sup_gaps[0], rep.eps_sup_gaps[2]);
}
