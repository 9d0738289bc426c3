#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rldp/control_stop.hpp"
#include "rldp/hjbvi.hpp"
#include "rldp/rate.hpp"

namespace rldp {

enum class Verdict { consistent, inconsistent, inconclusive };
std::string to_string(Verdict v);

struct ExperimentConfig {
  ExperimentConfig(Domain d, ObliqueField f, CoefficientField c, Vec x)
      : domain(std::move(d)), field(std::move(f)), coeffs(std::move(c)), x0(std::move(x)) {}

  Domain domain;
  ObliqueField field;
  CoefficientField coeffs;
  Vec x0;
  double t0 = 0.0;
  double T = 1.0;
  std::optional<EventSpec> ball;        // upper-bound experiment
  std::optional<EventSpec> complements; // lower-bound experiment

  std::vector<double> eps_ladder{0.5, 0.35, 0.25};
  long n_samples = 100000;
  int n_steps = 1000;  // Euler steps of the simulated SDE
  std::uint64_t seed = 1;
  int threads = 0;

  double rate_tol = 1e-3;
  RateOptions rate_opts;

  GridParams grid;                // hjbvi lattice
  bool scheme_refine = true;      // grid Cauchy estimate from one refinement
  double cap = 0.0;               // obstacle height A; 0 picks 2 Lambda + 1
  double rel_slack = 0.15;
  bool finite_eps_term = true;    // include |v_eps - v_0| from the PDE in the slack
  bool richardson = false;

  int dp_steps = 8;
  int dp_substeps = 16;
  std::vector<double> dp_magnitudes;  // empty picks a default ladder

  // goodness proxy
  double goodness_level = 1.0;
  int goodness_controls = 64;
  double weak_amplitude = 1.0;
  int weak_n_max = 64;
};

void validate_config(const ExperimentConfig& cfg);

struct LadderEntry {
  double eps = 0.0;
  McEstimate estimate;
  bool finite = false;
  LogRate log_rate;
};

struct SlackLedger {
  double statistical = 0.0;
  double scheme = 0.0;
  double finite_eps = 0.0;
  double relative = 0.0;
  double total() const { return statistical + scheme + finite_eps + relative; }
};

struct LdpReport {
  std::string experiment;
  std::string event_id;
  std::vector<LadderEntry> ladder;
  double lambda_value = kInf;
  bool lambda_feasible = false;
  double rate_residual = kInf;
  double dp_value = kInf;
  std::string dp_source;
  double cap = 0.0;
  double pde_eps_value = kInf;    // -eps^2 ln u at the smallest eps, when available
  double pde_limit_value = kInf;  // eps = 0 obstacle problem on the lattice
  SlackLedger slack;
  bool monotone = false;
  double smallest_eps_rate = kInf;
  double two_sided_gap = kInf;  // |L(eps_min) - Lambda|
  bool pairwise_ok = false;
  std::optional<double> extrapolated;
  Verdict verdict = Verdict::inconclusive;
  std::vector<std::string> details;
};

LdpReport run_upper_bound_experiment(const ExperimentConfig& cfg);
LdpReport run_lower_bound_experiment(const ExperimentConfig& cfg);

struct CapCase {
  double A = 0.0;
  double capped = 0.0;        // extrapolated from grids h and h/2
  double capped_coarse = 0.0;
  double capped_fine = 0.0;
  double expected = 0.0;      // min(A, uncapped)
  double rel_error = 0.0;
  bool pass = false;
};

struct CapReport {
  double eps = 0.0;
  double uncapped = 0.0;      // extrapolated from grids h and h/2
  double uncapped_coarse = 0.0;
  double uncapped_fine = 0.0;
  std::vector<CapCase> cases;
  double tolerance = 0.1;
  bool pass = false;
};

// Capped eps-VI value against min(A, -eps^2 ln P[X in B]) at the smallest ladder eps.
// Both sides use first-order Richardson extrapolation 2 v(h/2) - v(h).
CapReport cap_identity_check(const ExperimentConfig& cfg, const std::vector<double>& caps, double tolerance = 0.1);

struct GoodnessReport {
  WeakStabilityReport weak;
  double level = 0.0;
  int n_controls = 0;
  double max_action = 0.0;
  double max_holder = 0.0;
  double envelope = 0.0;
  double max_distance_from_free = 0.0;
  bool pass = false;
};

GoodnessReport goodness_proxy(const ExperimentConfig& cfg);

// Default control magnitudes for the discrete multiple-stopping problem.
std::vector<double> default_dp_magnitudes(const ExperimentConfig& cfg);

}  // namespace rldp
