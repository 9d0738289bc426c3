#pragma once

#include <functional>
#include <map>
#include <vector>

#include "rldp/sde.hpp"

namespace rldp {

using StateRule = std::function<Vec(int k, const Vec& x, const Vec& alpha)>;  // cell k: t_k -> t_{k+1}
using Obstacle = std::function<double(double t, const Vec& x)>;

struct DiscreteProblem {
  TimeGrid grid;
  std::vector<Vec> control_set;
  StateRule state_rule;
  std::vector<Obstacle> obstacles;
  double obstacle_bound = 1e6;
};

// {-c, 0, c}^m, or with several magnitudes {-c_j, ..., 0, ..., c_j}^m.
std::vector<Vec> default_control_set(int m, const std::vector<double>& magnitudes);

// One grid cell of the reflected ODE with frozen control, `substeps` Euler steps.
StateRule make_reflected_state_rule(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                    const TimeGrid& grid, int substeps = 16);

// A 1_{B} or A 1_{B^c} for tube i of an event, same node test as event_hit.
Obstacle tube_indicator(const EventSpec& ev, int i, double height, bool complement);

double value_inf_sup(const DiscreteProblem& p, int k0, const Vec& x);
double value_inf_inf(const DiscreteProblem& p, int k0, const Vec& x);
double value_inf_inf(const DiscreteProblem& p, const Obstacle& phi, int k0, const Vec& x);
double multi_stop_value(const DiscreteProblem& p, int k0, const Vec& x, double max_evaluations = 1e8);
double reduced_value(const DiscreteProblem& p, int k0, const Vec& x);

// v^J(k0, x) for every nonempty J, keyed by bitmask over obstacle indices.
std::map<unsigned, double> reduced_values_by_subset(const DiscreteProblem& p, int k0, const Vec& x);

// Control sequence and obstacle values along one enumeration leaf (for diagnostics).
double total_action(const DiscreteProblem& p, const std::vector<int>& controls, int k0, int upto);

}  // namespace rldp
