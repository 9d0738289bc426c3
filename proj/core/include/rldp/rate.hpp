#pragma once

#include <string>
#include <vector>

#include "rldp/sde.hpp"

namespace rldp {

struct RateOptions {
  int segments = 64;
  int substeps = 4;          // state steps per control segment
  bool refine = true;        // double segments until the value moves < refine_rel
  int max_segments = 128;
  double refine_rel = 0.01;
  std::vector<double> weights{1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8};
  int max_iterations = 300;  // per L-BFGS solve
  double fd_step = 1e-6;
  bool escape_starts = true; // extra constant starts along +-e_j for complement events
  int threads = 1;
};

struct RateResult {
  bool feasible = false;
  double value = kInf;  // +inf sentinel when infeasible
  Control optimizer;
  double constraint_residual = kInf;
  int iterations = 0;
  int winning_start = -1;
  int segments = 0;
  bool zero_tail_applied = false;
  std::string diagnostics;
};

double path_rate(const Control& control);

RateResult rate_of_path(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs, double t0,
                        const Vec& x, const ReferencePath& g, double T, double tol, const RateOptions& opts = {});

RateResult rate_of_event(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs, double t0,
                         const Vec& x, const EventSpec& event, double T, double tol, const RateOptions& opts = {});

// Distance of the controlled path from the event (0 when inside) and the path itself.
double event_residual(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs, double t0,
                      const Vec& x, const EventSpec& event, const Control& control, int substeps);

struct WeakStabilityReport {
  std::vector<int> n_values;
  std::vector<double> sup_dists;
  bool eventually_decreasing = false;
  int decreasing_from = -1;  // first n after which the sequence is nonincreasing
  bool final_quarter = false;
};

// alpha_n(s) = c sin(n s) in every control component, n in n_values.
WeakStabilityReport weak_stability_check(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                         double t0, const Vec& x, double T, double c,
                                         const std::vector<int>& n_values, int n_steps = 4096);

std::vector<int> dyadic_ladder(int n_max);

}  // namespace rldp
