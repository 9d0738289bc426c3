#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rldp/control_stop.hpp"

namespace rldp {

enum class ViType { min_type, max_type };
// u-level stopping: inf over stopping times gives u <= psi, sup gives u >= psi
enum class StopType { inf_stop, sup_stop };

// Godunov applies to separable Hamiltonians (diagonal sigma sigma^T); cross terms fall back to LLF.
enum class Flux { godunov, lax_friedrichs };

struct GridParams {
  int cells = 0;              // per axis; 0 picks 200 (1D) or 80 (2D)
  double t0 = 0.0;
  double T = 1.0;
  double dt = 0.0;            // 0 picks cfl_fraction * bound
  double cfl_fraction = 0.9;
  double grad_estimate = 0.0; // bound on |Dv|; 0 derives it from the obstacle oscillation
  int stored_layers = 33;
  Flux flux = Flux::godunov;
};

struct GhostStencil {
  int node = 0;
  std::vector<int> sources;
  std::vector<double> weights;
};

struct ComplementarityReport {
  double min_gap = kInf;        // min(v - psi) for min_type, min(phi - v) for max_type
  double max_violation = 0.0;   // max over interior nodes of min(|residual|, |v - obstacle|)
  double max_residual = 0.0;
};

class ValueGrid {
 public:
  int dim = 1;
  int nx = 0, ny = 1;           // lattice points per axis, one padding layer included
  double lo[2] = {0, 0};
  double h = 0.0;
  double dt = 0.0;
  double cfl_bound = 0.0;
  long time_steps = 0;
  std::vector<char> active;
  std::vector<GhostStencil> ghosts;
  std::vector<double> times;                // stored layer times, increasing
  std::vector<std::vector<double>> layers;  // values on the full lattice (NaN off the active set)
  ComplementarityReport complementarity;

  int index(int i, int j = 0) const { return i + nx * j; }
  Vec coord(int idx) const;
  int n_active() const;
  // linear / bilinear interpolation over active corners at stored layer l
  double value(int layer, const Vec& x) const;
  double value_t0(const Vec& x) const { return value(0, x); }

  void write_csv(std::ostream& os) const;
  void write_binary(const std::string& path) const;
  static ValueGrid read_binary(const std::string& path);
};

// Centered ramp over one cell: 0 well inside the tube, height well outside (complement=true),
// or the reverse (complement=false).
Obstacle tube_obstacle(const EventSpec& ev, int i, double height, bool complement, double width);

ValueGrid solve_limit_vi(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                         const Obstacle& obstacle, ViType vi_type, const std::function<double(const Vec&)>& terminal,
                         const GridParams& gp = {});

ValueGrid solve_eps_vi(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                       const Obstacle& obstacle, NoiseScale eps, ViType vi_type,
                       const std::function<double(const Vec&)>& terminal, const GridParams& gp = {});

// Linear obstacle problem for u = inf/sup over stopping times of E psi(theta, X_theta).
ValueGrid solve_linear_vi(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                          const Obstacle& psi, NoiseScale eps, StopType stop, const GridParams& gp = {});

ValueGrid log_transform(const ValueGrid& u, NoiseScale eps);

double grid_cell_size(const Domain& dom, const GridParams& gp);

}  // namespace rldp
