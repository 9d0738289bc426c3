#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rldp/types.hpp"

namespace rldp {

enum class DomainKind { interval, disk, ellipse, custom };

std::string to_string(DomainKind k);

// Smooth bounded domain described by a level function L (negative inside).
// Signed distance is positive inside, the normal points toward increasing L.
class Domain {
 public:
  using LevelFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;

  static Domain interval(double lo, double hi);
  static Domain disk(Vec center, double radius);
  static Domain ellipse(Vec center, double a, double b);
  // 2D star-shaped region around `center`; `reach_hint` <= 0 asks for an estimate.
  static Domain custom(LevelFn level, std::optional<GradFn> grad, Vec center, Vec box_lo, Vec box_hi,
                       double reach_hint = 0.0);
  // |x/a|^p + |y/b|^p < 1, p >= 2.
  static Domain superellipse(Vec center, double a, double b, double p);

  DomainKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Vec& box_lo() const { return box_lo_; }
  const Vec& box_hi() const { return box_hi_; }
  const Vec& center() const { return center_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }

  double level(const Vec& x) const;
  Vec level_gradient(const Vec& x) const;
  double signed_distance(const Vec& x) const;
  Vec normal(const Vec& x) const;
  Vec tangent(const Vec& x) const;
  Vec project_to_boundary(const Vec& x) const;
  bool contains(const Vec& x, double tol = 0.0) const { return signed_distance(x) >= -tol; }
  bool in_box(const Vec& x) const;

  std::vector<Vec> sample_boundary(int n) const;
  // Quasi-uniform interior points (Halton), deterministic.
  std::vector<Vec> sample_interior(int n, double min_depth = 0.0) const;
  double max_distance() const;
  double reach() const;

 private:
  Domain() = default;
  Vec project_ellipse(const Vec& x) const;
  Vec project_custom(const Vec& x) const;
  void build_custom_polyline();

  DomainKind kind_ = DomainKind::interval;
  int dim_ = 1;
  Vec center_;
  double a_ = 1.0, b_ = 1.0;
  Vec box_lo_, box_hi_;
  LevelFn level_fn_;
  std::optional<GradFn> grad_fn_;
  double reach_ = 0.0;
  double max_dist_ = 0.0;
  std::shared_ptr<const std::vector<Vec>> polyline_;
};

struct ObliqueReport {
  double min_dot = 0.0;
  double lipschitz_est = 0.0;
  Vec argmin;
};

// Boundary direction field gamma with certified lower bound c0 on gamma . n.
class ObliqueField {
 public:
  using Fn = std::function<Vec(const Vec&)>;

  ObliqueField(Fn gamma, double lipschitz_bound, double c0, std::string name = "custom");

  static ObliqueField normal(const Domain& dom);
  // gamma = n + kappa * t, t the counterclockwise unit tangent.
  static ObliqueField normal_plus_tangent(const Domain& dom, double kappa);
  static ObliqueField constant(Vec v);

  Vec operator()(const Vec& x) const { return gamma_(x); }
  double c0() const { return c0_; }
  double lipschitz_bound() const { return lip_; }
  const std::string& name() const { return name_; }

  ObliqueField with_c0(double c0) const;

 private:
  Fn gamma_;
  double lip_;
  double c0_;
  std::string name_;
};

ObliqueReport validate_oblique(const Domain& dom, const ObliqueField& field, int n_samples = 4096);

// Returns the field with c0 set to the sampled minimum; throws ObliqueViolation if it is <= 0.
ObliqueField certify(const Domain& dom, const ObliqueField& field, int n_samples = 4096);

struct EpsPerturbation {
  Vec drift_shift;        // b_eps = b + eps * drift_shift
  double sigma_scale = 0; // sigma_eps = (1 + eps * sigma_scale) sigma
};

class CoefficientField {
 public:
  using DriftFn = std::function<Vec(double, const Vec&)>;
  using DiffFn = std::function<Mat(double, const Vec&)>;

  CoefficientField(DriftFn b, DiffFn sigma, int d, int m, double lipschitz_x, std::string name = "custom");

  static CoefficientField constant(Vec b, Mat sigma);
  // b(t,x) = b0 + B x
  static CoefficientField linear(Mat B, Vec b0, Mat sigma);
  // b(t,x) = omega * J (x - c), J the quarter turn; 2D only.
  static CoefficientField rotational(double omega, Vec center, Mat sigma);

  CoefficientField with_eps_family(EpsPerturbation p) const;

  Vec b(double t, const Vec& x) const { return b_(t, x); }
  Mat sigma(double t, const Vec& x) const { return sigma_(t, x); }
  Vec b_eps(double eps, double t, const Vec& x) const;
  Mat sigma_eps(double eps, double t, const Vec& x) const;

  int d() const { return d_; }
  int m() const { return m_; }
  double lipschitz_x() const { return lip_; }
  bool has_eps_family() const { return eps_.has_value(); }
  const std::string& name() const { return name_; }

 private:
  DriftFn b_;
  DiffFn sigma_;
  int d_, m_;
  double lip_;
  std::string name_;
  std::optional<EpsPerturbation> eps_;
};

struct CoefficientReport {
  double max_lipschitz_quotient = 0.0;
  bool lipschitz_ok = true;
  std::vector<double> eps_sup_gaps;  // per ladder entry, sup |b_eps-b| + ||sigma_eps-sigma||
  bool eps_monotone = true;
};

CoefficientReport check_coefficients(const CoefficientField& c, const Domain& dom, double T,
                                     const std::vector<double>& eps_ladder, int n_samples = 512);

}  // namespace rldp
