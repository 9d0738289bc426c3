#pragma once

#include <vector>

#include "rldp/geometry.hpp"

namespace rldp {

struct TestFnOptions {
  int search_samples = 1024;
  double max_constant = 1099511627776.0;  // 2^40
  double fd_step = 1e-6;
};

class TestFunction {
 public:
  TestFunction(const Domain& dom, const ObliqueField& field, double eps, double rho, double A, double B, double C);

  double eps() const { return eps_; }
  double rho() const { return rho_; }
  double A() const { return A_; }
  double B() const { return B_; }
  double C() const { return C_; }
  double K() const { return K_; }
  void set_K(double k) { K_ = k; }

  Vec mu(const Vec& x) const;      // gamma / (gamma . n) at the projection of x
  Vec mu_rho(const Vec& x) const;  // mollified, cut off away from the boundary
  double d(const Vec& x) const { return dom_.signed_distance(x); }

  double phi(const Vec& x, const Vec& y) const;
  double psi(const Vec& x, const Vec& y) const;
  // central differences, step h
  Vec grad_x(const Vec& x, const Vec& y, double h = 1e-6) const;
  Vec grad_y(const Vec& x, const Vec& y, double h = 1e-6) const;

  const Domain& domain() const { return dom_; }
  const ObliqueField& field() const { return field_; }

  // psi = E(C) phi - B rho^2/eps^2 (d(x)+d(y)); these return the two pieces' directional derivatives
  void psi_iii_parts(const Vec& x, const Vec& y, bool wrt_x, double h, double& base, double& per_B) const;

 private:
  Vec mu_ext(const Vec& x) const;

  Domain dom_;
  ObliqueField field_;
  double eps_, rho_, A_, B_, C_;
  double dmax_, reach_;
  double K_ = 0.0;
};

struct TestFnReport {
  double K_psi_i = 0.0;
  double K_psi_ii = 0.0;
  double min_psi_iii = kInf;
  double max_mu_error = 0.0;  // max |mu_rho - mu| on boundary samples
  double K1 = 0.0;            // max |mu_rho| + |D mu_rho|
  int n_pairs = 0;
  int n_boundary_pairs = 0;
};

// Deterministic nested sample sets: the first n of 2n are the n-sample set.
std::vector<std::pair<Vec, Vec>> testfn_pairs(const Domain& dom, int n, double rho);
std::vector<std::pair<Vec, Vec>> testfn_boundary_pairs(const Domain& dom, int n, double rho);

TestFunction build_testfn(const Domain& dom, const ObliqueField& field, double eps, double rho,
                          const TestFnOptions& opts = {});

TestFnReport check_testfn_properties(const TestFunction& tf, int n_samples, double fd_step = 1e-6);

}  // namespace rldp
