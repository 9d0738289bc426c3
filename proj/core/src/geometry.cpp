#include "rldp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rldp {

namespace {

constexpr double kPi = std::numbers::pi;

Vec perp(const Vec& v) { return vec2(-v(1), v(0)); }

// Closest point on the axis-aligned ellipse (e0 >= e1) for y in the first quadrant.
// Bisection on the Lagrange multiplier, following Eberly's robust formulation.
double ellipse_root(double r0, double z0, double z1, double g) {
  double n0 = r0 * z0;
  double s0 = z1 - 1.0;
  double s1 = g < 0 ? 0.0 : std::hypot(n0, z1) - 1.0;
  double s = 0.0;
  for (int i = 0; i < 1100; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    double q0 = n0 / (s + r0), q1 = z1 / (s + 1.0);
    double gg = q0 * q0 + q1 * q1 - 1.0;
    if (gg > 0)
      s0 = s;
    else if (gg < 0)
      s1 = s;
    else
      break;
  }
  return s;
}

void ellipse_quadrant(double e0, double e1, double y0, double y1, double& x0, double& x1) {
  if (y1 > 0) {
    if (y0 > 0) {
      double z0 = y0 / e0, z1 = y1 / e1;
      double g = z0 * z0 + z1 * z1 - 1.0;
      if (g != 0) {
        double r0 = (e0 / e1) * (e0 / e1);
        double s = ellipse_root(r0, z0, z1, g);
        x0 = r0 * y0 / (s + r0);
        x1 = y1 / (s + 1.0);
      } else {
        x0 = y0;
        x1 = y1;
      }
    } else {
      x0 = 0;
      x1 = e1;
    }
  } else {
    double numer0 = e0 * y0, denom0 = e0 * e0 - e1 * e1;
    if (numer0 < denom0) {
      double xde0 = numer0 / denom0;
      x0 = e0 * xde0;
      x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
    } else {
      x0 = e0;
      x1 = 0;
    }
  }
}

}  // namespace

std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::interval: return "interval";
    case DomainKind::disk: return "disk";
    case DomainKind::ellipse: return "ellipse";
    case DomainKind::custom: return "custom";
  }
  return "?";
}

Domain Domain::interval(double lo, double hi) {
  if (!(hi > lo)) throw GeometryError("interval: need lo < hi", vec1(lo));
  Domain d;
  d.kind_ = DomainKind::interval;
  d.dim_ = 1;
  d.center_ = vec1(0.5 * (lo + hi));
  d.a_ = 0.5 * (hi - lo);
  double pad = 1e-3 * d.a_ + 1e-12;
  d.box_lo_ = vec1(lo - pad);
  d.box_hi_ = vec1(hi + pad);
  d.reach_ = d.a_;
  d.max_dist_ = d.a_;
  return d;
}

Domain Domain::disk(Vec center, double radius) {
  if (center.size() != 2 || !(radius > 0)) throw GeometryError("disk: bad parameters", center);
  Domain d;
  d.kind_ = DomainKind::disk;
  d.dim_ = 2;
  d.center_ = center;
  d.a_ = d.b_ = radius;
  double pad = 1e-3 * radius;
  d.box_lo_ = center.array() - (radius + pad);
  d.box_hi_ = center.array() + (radius + pad);
  d.reach_ = radius;
  d.max_dist_ = radius;
  return d;
}

Domain Domain::ellipse(Vec center, double a, double b) {
  if (center.size() != 2 || !(a > 0) || !(b > 0)) throw GeometryError("ellipse: bad parameters", center);
  Domain d;
  d.kind_ = DomainKind::ellipse;
  d.dim_ = 2;
  d.center_ = center;
  d.a_ = a;
  d.b_ = b;
  double pad = 1e-3 * std::max(a, b);
  d.box_lo_ = center - vec2(a + pad, b + pad);
  d.box_hi_ = center + vec2(a + pad, b + pad);
  double lo = std::min(a, b), hi = std::max(a, b);
  d.reach_ = lo * lo / hi;
  d.max_dist_ = lo;
  return d;
}

Domain Domain::custom(LevelFn level, std::optional<GradFn> grad, Vec center, Vec box_lo, Vec box_hi,
                      double reach_hint) {
  if (center.size() != 2) throw GeometryError("custom domains are two-dimensional", center);
  Domain d;
  d.kind_ = DomainKind::custom;
  d.dim_ = 2;
  d.center_ = center;
  d.box_lo_ = box_lo;
  d.box_hi_ = box_hi;
  d.level_fn_ = std::move(level);
  d.grad_fn_ = std::move(grad);
  if (!(d.level_fn_(center) < 0)) throw GeometryError("custom: center must lie inside", center);
  d.build_custom_polyline();
  if (reach_hint > 0) d.reach_ = reach_hint;
  // max of the signed distance over a lattice
  double best = 0.0;
  const int n = 48;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      Vec x = vec2(box_lo(0) + (box_hi(0) - box_lo(0)) * i / n, box_lo(1) + (box_hi(1) - box_lo(1)) * j / n);
      if (d.level_fn_(x) < 0) best = std::max(best, d.signed_distance(x));
    }
  d.max_dist_ = best;
  return d;
}

Domain Domain::superellipse(Vec center, double a, double b, double p) {
  if (!(p >= 2)) throw GeometryError("superellipse: exponent must be >= 2", center);
  auto level = [=](const Vec& x) {
    return std::pow(std::abs((x(0) - center(0)) / a), p) + std::pow(std::abs((x(1) - center(1)) / b), p) - 1.0;
  };
  auto grad = [=](const Vec& x) {
    double u = (x(0) - center(0)) / a, v = (x(1) - center(1)) / b;
    auto dpow = [p](double s) { return p * std::pow(std::abs(s), p - 1) * (s < 0 ? -1.0 : 1.0); };
    return vec2(dpow(u) / a, dpow(v) / b);
  };
  double pad = 1e-3 * std::max(a, b);
  Domain d = custom(level, GradFn(grad), center, center - vec2(a + pad, b + pad), center + vec2(a + pad, b + pad));
  return d;
}

void Domain::build_custom_polyline() {
  const int n = 2048;
  auto poly = std::make_shared<std::vector<Vec>>();
  poly->reserve(n);
  double rmax = (box_hi_ - box_lo_).norm();
  for (int k = 0; k < n; ++k) {
    double th = 2 * kPi * k / n;
    Vec dir = vec2(std::cos(th), std::sin(th));
    double lo = 0.0, hi = rmax;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * rmax; ++it) {
      double mid = 0.5 * (lo + hi);
      if (level_fn_(center_ + mid * dir) < 0)
        lo = mid;
      else
        hi = mid;
    }
    poly->push_back(center_ + 0.5 * (lo + hi) * dir);
  }
  // Curvature radius via circumscribed circles of consecutive triples.
  double rmin = kInf;
  for (int k = 0; k < n; ++k) {
    const Vec& p0 = (*poly)[(k + n - 1) % n];
    const Vec& p1 = (*poly)[k];
    const Vec& p2 = (*poly)[(k + 1) % n];
    double a = (p1 - p0).norm(), b = (p2 - p1).norm(), c = (p2 - p0).norm();
    double cross = std::abs((p1 - p0)(0) * (p2 - p0)(1) - (p1 - p0)(1) * (p2 - p0)(0));
    if (cross > 0) rmin = std::min(rmin, a * b * c / (2 * cross));
  }
  reach_ = std::isfinite(rmin) ? rmin : 0.5 * rmax;
  polyline_ = poly;
}

bool Domain::in_box(const Vec& x) const {
  for (int i = 0; i < dim_; ++i)
    if (x(i) < box_lo_(i) || x(i) > box_hi_(i)) return false;
  return true;
}

double Domain::level(const Vec& x) const {
  switch (kind_) {
    case DomainKind::interval: {
      double u = x(0) - center_(0);
      return (u * u - a_ * a_) / (2 * a_);
    }
    case DomainKind::disk: return ((x - center_).squaredNorm() - a_ * a_) / (2 * a_);
    case DomainKind::ellipse: {
      double u = (x(0) - center_(0)) / a_, v = (x(1) - center_(1)) / b_;
      return u * u + v * v - 1.0;
    }
    case DomainKind::custom: return level_fn_(x);
  }
  return 0.0;
}

Vec Domain::level_gradient(const Vec& x) const {
  switch (kind_) {
    case DomainKind::interval: return vec1((x(0) - center_(0)) / a_);
    case DomainKind::disk: return (x - center_) / a_;
    case DomainKind::ellipse:
      return vec2(2 * (x(0) - center_(0)) / (a_ * a_), 2 * (x(1) - center_(1)) / (b_ * b_));
    case DomainKind::custom: {
      if (grad_fn_) return (*grad_fn_)(x);
      double h = 1e-7 * (1.0 + x.norm());
      Vec g(2);
      for (int i = 0; i < 2; ++i) {
        Vec e = Vec::Zero(2);
        e(i) = h;
        g(i) = (level_fn_(x + e) - level_fn_(x - e)) / (2 * h);
      }
      return g;
    }
  }
  return Vec::Zero(dim_);
}

Vec Domain::normal(const Vec& x) const {
  Vec g = level_gradient(x);
  double n = g.norm();
  if (!(n >= 1e-9)) throw DegenerateGeometry("normal: level gradient vanishes");
  return g / n;
}

Vec Domain::tangent(const Vec& x) const {
  if (dim_ == 1) return Vec::Zero(1);
  return perp(normal(x));
}

Vec Domain::project_ellipse(const Vec& x) const {
  Vec y = x - center_;
  bool swap = a_ < b_;
  double e0 = swap ? b_ : a_, e1 = swap ? a_ : b_;
  double y0 = swap ? y(1) : y(0), y1 = swap ? y(0) : y(1);
  double s0 = y0 < 0 ? -1.0 : 1.0, s1 = y1 < 0 ? -1.0 : 1.0;
  double x0, x1;
  ellipse_quadrant(e0, e1, std::abs(y0), std::abs(y1), x0, x1);
  x0 *= s0;
  x1 *= s1;
  Vec q = swap ? vec2(x1, x0) : vec2(x0, x1);
  q += center_;
  // polish onto the level set
  for (int i = 0; i < 3; ++i) {
    double L = level(q);
    if (std::abs(L) <= 1e-15) break;
    Vec g = level_gradient(q);
    q -= L * g / g.squaredNorm();
  }
  return q;
}

Vec Domain::project_custom(const Vec& x) const {
  const auto& poly = *polyline_;
  size_t best = 0;
  double bd = kInf;
  for (size_t k = 0; k < poly.size(); ++k) {
    double dd = (poly[k] - x).squaredNorm();
    if (dd < bd) {
      bd = dd;
      best = k;
    }
  }
  Vec y = poly[best];
  double scale = 1.0 + (box_hi_ - box_lo_).norm();
  for (int it = 0; it < 100; ++it) {
    Vec g = level_gradient(y);
    double gn2 = g.squaredNorm();
    if (gn2 < 1e-18) throw GeometryError("project_to_boundary: vanishing gradient", y);
    y -= level_fn_(y) * g / gn2;
    g = level_gradient(y);
    Vec t = perp(g) / g.norm();
    double tang = (x - y).dot(t);
    // damped tangential correction: keep the move inside one polyline cell
    double cap = 4.0 * (poly[1] - poly[0]).norm();
    double step = std::clamp(tang, -cap, cap);
    y += step * t;
    double res = std::abs(level_fn_(y));
    if (res <= 1e-12 && std::abs(tang) <= 1e-12 * scale) {
      g = level_gradient(y);
      y -= level_fn_(y) * g / g.squaredNorm();
      return y;
    }
  }
  throw GeometryError("project_to_boundary: Newton iteration did not converge", y);
}

Vec Domain::project_to_boundary(const Vec& x) const {
  switch (kind_) {
    case DomainKind::interval: {
      double u = x(0) - center_(0);
      return vec1(center_(0) + (u < 0 ? -a_ : a_));
    }
    case DomainKind::disk: {
      Vec u = x - center_;
      double r = u.norm();
      if (r == 0.0) return center_ + vec2(a_, 0.0);
      return center_ + a_ * u / r;
    }
    case DomainKind::ellipse: return project_ellipse(x);
    case DomainKind::custom: return project_custom(x);
  }
  return x;
}

double Domain::signed_distance(const Vec& x) const {
  switch (kind_) {
    case DomainKind::interval: return a_ - std::abs(x(0) - center_(0));
    case DomainKind::disk: return a_ - (x - center_).norm();
    case DomainKind::ellipse:
    case DomainKind::custom: {
      Vec q = project_to_boundary(x);
      double dist = (x - q).norm();
      return level(x) <= 0 ? dist : -dist;
    }
  }
  return 0.0;
}

std::vector<Vec> Domain::sample_boundary(int n) const {
  std::vector<Vec> out;
  if (n <= 0) return out;
  switch (kind_) {
    case DomainKind::interval:
      out.push_back(vec1(center_(0) - a_));
      if (n > 1) out.push_back(vec1(center_(0) + a_));
      break;
    case DomainKind::disk:
    case DomainKind::ellipse:
      for (int k = 0; k < n; ++k) {
        double th = 2 * kPi * k / n;
        out.push_back(center_ + vec2(a_ * std::cos(th), b_ * std::sin(th)));
      }
      break;
    case DomainKind::custom: {
      const auto& poly = *polyline_;
      std::vector<double> s(poly.size() + 1, 0.0);
      for (size_t k = 0; k < poly.size(); ++k) s[k + 1] = s[k] + (poly[(k + 1) % poly.size()] - poly[k]).norm();
      double total = s.back();
      size_t seg = 0;
      for (int k = 0; k < n; ++k) {
        double target = total * k / n;
        while (seg + 1 < poly.size() && s[seg + 1] < target) ++seg;
        double w = (target - s[seg]) / std::max(1e-300, s[seg + 1] - s[seg]);
        Vec p = (1 - w) * poly[seg] + w * poly[(seg + 1) % poly.size()];
        Vec g = level_gradient(p);
        for (int i = 0; i < 4; ++i) p -= level_fn_(p) * g / g.squaredNorm();
        out.push_back(p);
      }
      break;
    }
  }
  return out;
}

std::vector<Vec> Domain::sample_interior(int n, double min_depth) const {
  std::vector<Vec> out;
  out.reserve(n);
  unsigned long i = 1;
  while (static_cast<int>(out.size()) < n && i < 1000UL * (n + 10)) {
    Vec x(dim_);
    x(0) = box_lo_(0) + (box_hi_(0) - box_lo_(0)) * radical_inverse(i, 2);
    if (dim_ == 2) x(1) = box_lo_(1) + (box_hi_(1) - box_lo_(1)) * radical_inverse(i, 3);
    ++i;
    if (signed_distance(x) >= min_depth) out.push_back(x);
  }
  return out;
}

double Domain::max_distance() const { return max_dist_; }
double Domain::reach() const { return reach_; }

// ---------------------------------------------------------------------------

ObliqueField::ObliqueField(Fn gamma, double lipschitz_bound, double c0, std::string name)
    : gamma_(std::move(gamma)), lip_(lipschitz_bound), c0_(c0), name_(std::move(name)) {}

ObliqueField ObliqueField::normal(const Domain& dom) {
  double lip = 1.0 / std::max(1e-12, dom.reach());
  return ObliqueField([dom](const Vec& x) { return dom.normal(x); }, lip, 1.0, "normal");
}

ObliqueField ObliqueField::normal_plus_tangent(const Domain& dom, double kappa) {
  double lip = std::sqrt(1 + kappa * kappa) / std::max(1e-12, dom.reach());
  return ObliqueField(
      [dom, kappa](const Vec& x) {
        Vec n = dom.normal(x);
        if (n.size() == 1) return n;
        return Vec(n + kappa * perp(n));
      },
      lip, 1.0, "normal_plus_tangent");
}

ObliqueField ObliqueField::constant(Vec v) {
  return ObliqueField([v](const Vec&) { return v; }, 0.0, 0.0, "constant");
}

ObliqueField ObliqueField::with_c0(double c0) const {
  ObliqueField f = *this;
  f.c0_ = c0;
  return f;
}

ObliqueReport validate_oblique(const Domain& dom, const ObliqueField& field, int n_samples) {
  if (n_samples < 1) throw Error("validate_oblique: n_samples must be >= 1");
  auto pts = dom.sample_boundary(n_samples);
  std::vector<Vec> g(pts.size());
  ObliqueReport rep;
  rep.min_dot = kInf;
  for (size_t i = 0; i < pts.size(); ++i) {
    g[i] = field(pts[i]);
    double dot = g[i].dot(dom.normal(pts[i]));
    if (dot < rep.min_dot) {
      rep.min_dot = dot;
      rep.argmin = pts[i];
    }
  }
  double lip = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) {
      double dx = (pts[i] - pts[j]).norm();
      if (dx > 0) lip = std::max(lip, (g[i] - g[j]).norm() / dx);
    }
  rep.lipschitz_est = lip;
  if (!(rep.min_dot > 0))
    throw ObliqueViolation("oblique condition violated: min gamma.n = " + std::to_string(rep.min_dot), rep.min_dot,
                           rep.argmin);
  return rep;
}

ObliqueField certify(const Domain& dom, const ObliqueField& field, int n_samples) {
  auto rep = validate_oblique(dom, field, n_samples);
  return field.with_c0(rep.min_dot);
}

// ---------------------------------------------------------------------------

CoefficientField::CoefficientField(DriftFn b, DiffFn sigma, int d, int m, double lipschitz_x, std::string name)
    : b_(std::move(b)), sigma_(std::move(sigma)), d_(d), m_(m), lip_(lipschitz_x), name_(std::move(name)) {}

CoefficientField CoefficientField::constant(Vec b, Mat sigma) {
  int d = static_cast<int>(b.size()), m = static_cast<int>(sigma.cols());
  if (sigma.rows() != d) throw ConfigError("constant coefficients: sigma rows must equal dim(b)");
  return CoefficientField([b](double, const Vec&) { return b; }, [sigma](double, const Vec&) { return sigma; }, d,
                          m, 0.0, "constant");
}

CoefficientField CoefficientField::linear(Mat B, Vec b0, Mat sigma) {
  int d = static_cast<int>(b0.size()), m = static_cast<int>(sigma.cols());
  if (B.rows() != d || B.cols() != d || sigma.rows() != d) throw ConfigError("linear coefficients: shape mismatch");
  Eigen::JacobiSVD<Mat> svd(B);
  double lip = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  return CoefficientField([B, b0](double, const Vec& x) { return Vec(b0 + B * x); },
                          [sigma](double, const Vec&) { return sigma; }, d, m, lip, "linear");
}

CoefficientField CoefficientField::rotational(double omega, Vec center, Mat sigma) {
  if (center.size() != 2 || sigma.rows() != 2) throw ConfigError("rotational coefficients are two-dimensional");
  int m = static_cast<int>(sigma.cols());
  return CoefficientField(
      [omega, center](double, const Vec& x) {
        Vec u = x - center;
        return vec2(-omega * u(1), omega * u(0));
      },
      [sigma](double, const Vec&) { return sigma; }, 2, m, std::abs(omega), "rotational");
}

CoefficientField CoefficientField::with_eps_family(EpsPerturbation p) const {
  if (p.drift_shift.size() != d_) throw ConfigError("eps family: drift shift has wrong dimension");
  CoefficientField c = *this;
  c.eps_ = std::move(p);
  return c;
}

Vec CoefficientField::b_eps(double eps, double t, const Vec& x) const {
  if (!eps_) return b_(t, x);
  return b_(t, x) + eps * eps_->drift_shift;
}

Mat CoefficientField::sigma_eps(double eps, double t, const Vec& x) const {
  if (!eps_) return sigma_(t, x);
  return (1.0 + eps * eps_->sigma_scale) * sigma_(t, x);
}

CoefficientReport check_coefficients(const CoefficientField& c, const Domain& dom, double T,
                                     const std::vector<double>& eps_ladder, int n_samples) {
  CoefficientReport rep;
  auto pts = dom.sample_interior(n_samples);
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    double t = T * radical_inverse(i + 1, 5);
    const Vec& x = pts[i];
    const Vec& y = pts[i + 1];
    double dx = (x - y).norm();
    if (dx == 0) continue;
    double q = std::max((c.b(t, x) - c.b(t, y)).norm(), (c.sigma(t, x) - c.sigma(t, y)).norm()) / dx;
    rep.max_lipschitz_quotient = std::max(rep.max_lipschitz_quotient, q);
  }
  rep.lipschitz_ok = rep.max_lipschitz_quotient <= c.lipschitz_x() * (1 + 1e-6) + 1e-300;
  for (double eps : eps_ladder) {
    double gap = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      double t = T * radical_inverse(i + 1, 5);
      gap = std::max(gap, (c.b_eps(eps, t, pts[i]) - c.b(t, pts[i])).norm() +
                              (c.sigma_eps(eps, t, pts[i]) - c.sigma(t, pts[i])).norm());
    }
    if (!rep.eps_sup_gaps.empty() && gap > rep.eps_sup_gaps.back() * (1 + 1e-12)) rep.eps_monotone = false;
    rep.eps_sup_gaps.push_back(gap);
  }
  return rep;
}

}  // namespace rldp
