#include "rldp/control_stop.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <cstring>
#include <tuple>

namespace rldp {

std::vector<Vec> default_control_set(int m, const std::vector<double>& magnitudes) {
  std::vector<double> levels{0.0};
  for (double c : magnitudes) {
    if (c == 0) continue;
    levels.push_back(-std::abs(c));
    levels.push_back(std::abs(c));
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<Vec> out;
  if (m == 1) {
    for (double a : levels) out.push_back(vec1(a));
  } else if (m == 2) {
    for (double a : levels)
      for (double b : levels) out.push_back(vec2(a, b));
  } else {
    throw Error("default_control_set: m must be 1 or 2");
  }
  return out;
}

StateRule make_reflected_state_rule(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                    const TimeGrid& grid, int substeps) {
  return [dom, field, coeffs, grid, substeps](int k, const Vec& x, const Vec& alpha) {
    double t = grid[k], h = grid.dt(k) / substeps;
    Vec y = x;
    for (int s = 0; s < substeps; ++s) {
      double ts = t + s * h;
      Vec p = y + (coeffs.b(ts, y) - coeffs.sigma(ts, y) * alpha) * h;
      y = reflect_step(dom, field, p).q;
    }
    return y;
  };
}

Obstacle tube_indicator(const EventSpec& ev, int i, double height, bool complement) {
  return [ev, i, height, complement](double t, const Vec& x) {
    bool in = ev.in_tube(i, t, x);
    return (in != complement) ? height : 0.0;
  };
}

namespace {

using Key = std::tuple<unsigned, int, double, double>;

Key make_key(unsigned J, int k, const Vec& x) {
  return {J, k, x(0), x.size() > 1 ? x(1) : 0.0};
}

void check_problem(const DiscreteProblem& p, int k0) {
  if (p.control_set.empty()) throw Error("DiscreteProblem: empty control set");
  if (k0 < 0 || k0 > p.grid.n_steps()) throw Error("DiscreteProblem: start index off the grid");
  if (!p.state_rule) throw Error("DiscreteProblem: missing state rule");
}

double bounded(const DiscreteProblem& p, double v) {
  if (!(std::abs(v) <= p.obstacle_bound)) throw Error("obstacle value exceeds the configured bound");
  return v;
}

class Solver {
 public:
  explicit Solver(const DiscreteProblem& p) : p_(p) {}

  // stop_rule: +1 for max(psi, cont) (inf-sup), -1 for min(phi, cont) (inf-inf)
  double game(int sign, const Obstacle& psi, int k, const Vec& x) {
    Key key = make_key(sign > 0 ? 0x80000000u : 0x40000000u, k, x);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    double stop = bounded(p_, psi(p_.grid[k], x));
    double v = stop;
    if (k < p_.grid.n_steps()) {
      double cont = kInf;
      double h = p_.grid.dt(k);
      for (const Vec& a : p_.control_set) {
        double c = 0.5 * a.squaredNorm() * h + game(sign, psi, k + 1, p_.state_rule(k, x, a));
        cont = std::min(cont, c);
      }
      v = sign > 0 ? std::max(stop, cont) : std::min(stop, cont);
    }
    memo_.emplace(key, v);
    return v;
  }

  double reward(unsigned J, int k, const Vec& x) {
    double best = kInf;
    for (size_t i = 0; i < p_.obstacles.size(); ++i) {
      unsigned bit = 1u << i;
      if (!(J & bit)) continue;
      double psi = bounded(p_, p_.obstacles[i](p_.grid[k], x));
      double v = (J == bit) ? psi : psi + reduced(J & ~bit, k, x);
      best = std::min(best, v);
    }
    return best;
  }

  double reduced(unsigned J, int k, const Vec& x) {
    Key key = make_key(J, k, x);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    double v = reward(J, k, x);
    if (k < p_.grid.n_steps()) {
      double h = p_.grid.dt(k);
      for (const Vec& a : p_.control_set) {
        double c = 0.5 * a.squaredNorm() * h + reduced(J, k + 1, p_.state_rule(k, x, a));
        v = std::min(v, c);
      }
    }
    memo_.emplace(key, v);
    return v;
  }

 private:
  const DiscreteProblem& p_;
  std::map<Key, double> memo_;
};

}  // namespace

double value_inf_sup(const DiscreteProblem& p, int k0, const Vec& x) {
  check_problem(p, k0);
  if (p.obstacles.size() != 1) throw Error("value_inf_sup: exactly one obstacle expected");
  Solver s(p);
  return s.game(+1, p.obstacles[0], k0, x);
}

double value_inf_inf(const DiscreteProblem& p, const Obstacle& phi, int k0, const Vec& x) {
  check_problem(p, k0);
  Solver s(p);
  return s.game(-1, phi, k0, x);
}

double value_inf_inf(const DiscreteProblem& p, int k0, const Vec& x) {
  if (p.obstacles.size() != 1) throw Error("value_inf_inf: exactly one obstacle expected");
  return value_inf_inf(p, p.obstacles[0], k0, x);
}

double multi_stop_value(const DiscreteProblem& p, int k0, const Vec& x, double max_evaluations) {
  check_problem(p, k0);
  const int N = static_cast<int>(p.obstacles.size());
  if (N < 1 || N > 3) throw Error("multi_stop_value: between one and three obstacles supported");
  const int n = p.grid.n_steps();
  const int L = n - k0;                 // control decisions
  const int nodes = L + 1;              // admissible stopping nodes k0..n
  double leaves = std::pow(static_cast<double>(p.control_set.size()), L);
  double evals = leaves * std::pow(static_cast<double>(nodes), N);
  if (evals > max_evaluations) throw StateSpaceTooLarge("multi_stop_value: enumeration exceeds the evaluation guard");

  std::vector<Vec> Y(nodes);
  std::vector<double> A(nodes);
  std::vector<std::vector<double>> psi(N, std::vector<double>(nodes));
  double best = kInf;

  auto evaluate_leaf = [&]() {
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < nodes; ++j) psi[i][j] = bounded(p, p.obstacles[i](p.grid[k0 + j], Y[j]));
    std::vector<int> th(N, 0);
    for (;;) {
      int last = *std::max_element(th.begin(), th.end());
      double v = A[last];
      for (int i = 0; i < N; ++i) v += psi[i][th[i]];
      best = std::min(best, v);
      int i = 0;
      while (i < N && ++th[i] == nodes) th[i++] = 0;
      if (i == N) break;
    }
  };

  // depth-first over control sequences
  std::function<void(int)> dfs = [&](int j) {
    if (j == L) {
      evaluate_leaf();
      return;
    }
    int k = k0 + j;
    double h = p.grid.dt(k);
    for (const Vec& a : p.control_set) {
      Y[j + 1] = p.state_rule(k, Y[j], a);
      A[j + 1] = A[j] + 0.5 * a.squaredNorm() * h;
      dfs(j + 1);
    }
  };
  Y[0] = x;
  A[0] = 0.0;
  dfs(0);
  return best;
}

std::map<unsigned, double> reduced_values_by_subset(const DiscreteProblem& p, int k0, const Vec& x) {
  check_problem(p, k0);
  const int N = static_cast<int>(p.obstacles.size());
  if (N < 1 || N > 16) throw Error("reduced_value: between one and sixteen obstacles supported");
  Solver s(p);
  std::map<unsigned, double> out;
  // bottom-up by cardinality; the memo shares sub-results between subsets
  for (int card = 1; card <= N; ++card)
    for (unsigned J = 1; J < (1u << N); ++J)
      if (std::popcount(J) == card) out[J] = s.reduced(J, k0, x);
  return out;
}

double reduced_value(const DiscreteProblem& p, int k0, const Vec& x) {
  const int N = static_cast<int>(p.obstacles.size());
  auto all = reduced_values_by_subset(p, k0, x);
  return all.at((1u << N) - 1);
}

double total_action(const DiscreteProblem& p, const std::vector<int>& controls, int k0, int upto) {
  double a = 0.0;
  for (int k = k0; k < upto; ++k) a += 0.5 * p.control_set[controls[k - k0]].squaredNorm() * p.grid.dt(k);
  return a;
}

}  // namespace rldp
