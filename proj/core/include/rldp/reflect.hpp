#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rldp/geometry.hpp"

namespace rldp {

class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> nodes);
  static TimeGrid uniform(double t0, double T, int n_steps);

  double t0() const { return nodes_.front(); }
  double T() const { return nodes_.back(); }
  int n_steps() const { return static_cast<int>(nodes_.size()) - 1; }
  double dt(int k) const { return nodes_[k + 1] - nodes_[k]; }
  double operator[](int k) const { return nodes_[k]; }
  const std::vector<double>& nodes() const { return nodes_; }
  // index of the cell [t_k, t_{k+1}) containing t (clamped)
  int cell(double t) const;
  // grid {s} together with all later nodes
  TimeGrid restart_at(double s) const;
  TimeGrid refined(int factor) const;

 private:
  std::vector<double> nodes_{0.0, 1.0};
};

// Piecewise-constant control on the cells of its grid.
struct Control {
  TimeGrid grid;
  std::vector<Vec> values;

  static Control zero(const TimeGrid& g, int m);
  const Vec& at(double t) const { return values[grid.cell(t)]; }
  double action() const;
};

struct ReflectOptions {
  double tol_feas = 1e-8;
  double tol_bdry = 1e-6;
};

struct ReflectedPath {
  TimeGrid grid;
  std::vector<Vec> points;
  std::vector<Vec> increments;  // increments[k]: reflection over step k -> k+1
  std::vector<double> cumulative;
  std::vector<char> boundary_flags;
  double total_variation = 0.0;

  Vec at(double t) const;  // linear interpolation
};

struct StepResult {
  Vec q;
  Vec dz;
  int rounds = 0;
};

StepResult reflect_step(const Domain& dom, const ObliqueField& field, const Vec& p);

ReflectedPath solve_reflected_ode(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                  const Control& control, double t0, const Vec& x, const TimeGrid& grid,
                                  const ReflectOptions& opts = {});

struct PicardWindow {
  int first_step = 0;
  int n_steps = 0;
  int iterations = 0;
  std::vector<double> distances;  // sup distance between successive iterates
  std::vector<double> ratios;     // measured on distances above the noise floor
  int halvings = 0;
};

struct PicardOptions {
  int initial_window = 0;  // in grid cells; 0 means the whole horizon
  bool adaptive = true;
  double target_ratio = 0.5;
  int max_iterations = 500;
  double noise_floor = 1e-13;
};

struct PicardResult {
  ReflectedPath path;
  std::vector<PicardWindow> windows;
  double max_ratio = 0.0;
};

PicardResult solve_skorokhod_picard(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                    const Control& control, double t0, const Vec& x, const TimeGrid& grid,
                                    double tol, const PicardOptions& popts = {}, const ReflectOptions& opts = {});

struct FlowReport {
  double defect = 0.0;
  int matched_nodes = 0;
};

FlowReport flow_check(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                      const Control& control, double t0, const Vec& x, const TimeGrid& grid, double s_mid);

double sup_distance(const ReflectedPath& a, const ReflectedPath& b);

// max over node pairs of |Y_s - Y_s'| / sqrt|s - s'|; pairs are strided beyond max_nodes
double holder_half_quotient(const ReflectedPath& p, int max_nodes = 2048);

// K(delta) = sup_{u <= t0 + delta} |Y_u - Y_t0| / sqrt(delta), max over the supplied deltas
double short_time_constant(const ReflectedPath& p, const std::vector<double>& deltas);

struct Perturbation {
  double t;
  Vec x;
};

// sup |Y^{t,x}_s - Y^{t',x'}_s|^2 / (|x-x'|^2 + |t-t'|^{1/4}) over common nodes and perturbations
double continuity_quotient(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                           const Control& control, double t0, const Vec& x, const TimeGrid& grid,
                           const std::vector<Perturbation>& perturbations);

struct PathCheck {
  double min_signed_distance = kInf;
  double interior_variation = 0.0;  // |dz| summed over steps ending off the boundary
  double max_angle = 0.0;           // angle between dz and gamma at the contact point
  bool variation_consistent = true;
};

PathCheck check_path(const Domain& dom, const ObliqueField& field, const ReflectedPath& p);

void write_path_csv(std::ostream& os, const ReflectedPath& p);

}  // namespace rldp
