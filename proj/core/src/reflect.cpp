#include "rldp/reflect.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace rldp {

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw Error("TimeGrid: need at least two nodes");
  for (size_t k = 0; k + 1 < nodes_.size(); ++k)
    if (!(nodes_[k + 1] > nodes_[k])) throw Error("TimeGrid: nodes must be strictly increasing");
}

TimeGrid TimeGrid::uniform(double t0, double T, int n_steps) {
  if (n_steps < 1 || !(T > t0) || t0 < 0) throw Error("TimeGrid: need n_steps >= 1 and 0 <= t0 < T");
  std::vector<double> nodes(n_steps + 1);
  double h = (T - t0) / n_steps;
  for (int k = 0; k <= n_steps; ++k) nodes[k] = t0 + k * h;
  nodes[n_steps] = T;
  return TimeGrid(std::move(nodes));
}

int TimeGrid::cell(double t) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  int k = static_cast<int>(it - nodes_.begin()) - 1;
  return std::clamp(k, 0, n_steps() - 1);
}

TimeGrid TimeGrid::restart_at(double s) const {
  std::vector<double> out{s};
  for (double t : nodes_)
    if (t > s) out.push_back(t);
  if (out.size() < 2) throw Error("TimeGrid::restart_at: restart time at or beyond horizon");
  return TimeGrid(std::move(out));
}

TimeGrid TimeGrid::refined(int factor) const {
  std::vector<double> out;
  for (int k = 0; k < n_steps(); ++k)
    for (int j = 0; j < factor; ++j) out.push_back(nodes_[k] + dt(k) * j / factor);
  out.push_back(T());
  return TimeGrid(std::move(out));
}

Control Control::zero(const TimeGrid& g, int m) {
  return Control{g, std::vector<Vec>(g.n_steps(), Vec::Zero(m))};
}

double Control::action() const {
  double a = 0.0;
  for (int k = 0; k < grid.n_steps(); ++k) a += 0.5 * values[k].squaredNorm() * grid.dt(k);
  return a;
}

Vec ReflectedPath::at(double t) const {
  const auto& nd = grid.nodes();
  if (t <= nd.front()) return points.front();
  if (t >= nd.back()) return points.back();
  int k = grid.cell(t);
  double w = (t - nd[k]) / (nd[k + 1] - nd[k]);
  return (1 - w) * points[k] + w * points[k + 1];
}

StepResult reflect_step(const Domain& dom, const ObliqueField& field, const Vec& p) {
  double sd0 = dom.signed_distance(p);
  if (sd0 >= 0) return {p, Vec::Zero(p.size()), 0};

  const double c0 = field.c0() > 0 ? field.c0() : 1.0;
  Vec c = dom.project_to_boundary(p);
  double lambda = -1.0;
  Vec q = p, g;
  for (int round = 1; round <= 200; ++round) {
    g = field(c);
    double lo = 0.0, hi = 2.0 * std::abs(sd0) / c0;
    int grow = 0;
    while (dom.signed_distance(p - hi * g) < 0) {
      lo = hi;
      hi *= 2.0;
      if (++grow > 60) throw ReflectionError("reflect_step: no feasible point along gamma", p);
    }
    // keep the feasible end of the bracket so the result is never outside
    while (hi - lo > 1e-15 * std::max(1.0, hi)) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (dom.signed_distance(p - mid * g) < 0)
        lo = mid;
      else
        hi = mid;
    }
    q = p - hi * g;
    bool done = std::abs(hi - lambda) < 1e-12;
    lambda = hi;
    if (done) return {q, lambda * g, round};
    c = dom.project_to_boundary(q);
  }
  throw ReflectionError("reflect_step: contact iteration did not converge in 200 rounds", p);
}

namespace {

void check_start(const Domain& dom, const TimeGrid& grid, double t0, const Vec& x, const ReflectOptions& opts) {
  if (std::abs(grid.t0() - t0) > 1e-12 * std::max(1.0, std::abs(t0)))
    throw Error("time grid does not start at t0");
  if (x.size() != dom.dim()) throw Error("initial point has wrong dimension");
  if (dom.signed_distance(x) < -opts.tol_feas) throw Error("initial point lies outside the closed domain");
}

ReflectedPath empty_path(const TimeGrid& grid, const Vec& x) {
  ReflectedPath path;
  path.grid = grid;
  int n = grid.n_steps();
  path.points.assign(n + 1, x);
  path.increments.assign(n, Vec::Zero(x.size()));
  path.cumulative.assign(n + 1, 0.0);
  path.boundary_flags.assign(n + 1, 0);
  return path;
}

void finish_path(const Domain& dom, const ReflectOptions& opts, ReflectedPath& path) {
  int n = path.grid.n_steps();
  double tv = 0.0;
  path.cumulative[0] = 0.0;
  for (int k = 0; k <= n; ++k) path.boundary_flags[k] = dom.signed_distance(path.points[k]) <= opts.tol_bdry;
  for (int k = 0; k < n; ++k) {
    tv += path.increments[k].norm();
    path.cumulative[k + 1] = tv;
  }
  path.total_variation = tv;
}

}  // namespace

ReflectedPath solve_reflected_ode(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                  const Control& control, double t0, const Vec& x, const TimeGrid& grid,
                                  const ReflectOptions& opts) {
  check_start(dom, grid, t0, x, opts);
  ReflectedPath path = empty_path(grid, x);
  Vec y = x;
  for (int k = 0; k < grid.n_steps(); ++k) {
    double t = grid[k], h = grid.dt(k);
    const Vec& a = control.at(t + 0.5 * h);
    Vec p = y + (coeffs.b(t, y) - coeffs.sigma(t, y) * a) * h;
    StepResult r = reflect_step(dom, field, p);
    y = r.q;
    path.points[k + 1] = y;
    path.increments[k] = r.dz;
  }
  finish_path(dom, opts, path);
  return path;
}

PicardResult solve_skorokhod_picard(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                    const Control& control, double t0, const Vec& x, const TimeGrid& grid,
                                    double tol, const PicardOptions& popts, const ReflectOptions& opts) {
  if (!(tol > 0)) throw Error("solve_skorokhod_picard: tol must be positive");
  check_start(dom, grid, t0, x, opts);
  const int n = grid.n_steps();
  PicardResult res;
  res.path = empty_path(grid, x);
  auto& Y = res.path.points;
  auto& dZ = res.path.increments;
  // iterate well past tol so window hand-offs do not accumulate error
  const double stop = std::max(popts.noise_floor, 1e-2 * tol);
  int w = popts.initial_window > 0 ? std::min(popts.initial_window, n) : n;

  int k0 = 0, halvings = 0;
  while (k0 < n) {
    int len = std::min(w, n - k0);
    PicardWindow win;
    win.first_step = k0;
    win.n_steps = len;
    std::vector<Vec> X(len + 1, Y[k0]), Yn(len + 1), dz(len);
    bool restart = false;
    int bad_run = 0;
    double prev = -1.0;
    for (int it = 1;; ++it) {
      if (it > popts.max_iterations) throw NoContraction("solve_skorokhod_picard: iteration limit reached");
      Yn[0] = Y[k0];
      for (int j = 0; j < len; ++j) {
        int k = k0 + j;
        double t = grid[k], h = grid.dt(k);
        const Vec& a = control.at(t + 0.5 * h);
        // coefficients frozen along the previous iterate
        Vec p = Yn[j] + (coeffs.b(t, X[j]) - coeffs.sigma(t, X[j]) * a) * h;
        StepResult r = reflect_step(dom, field, p);
        Yn[j + 1] = r.q;
        dz[j] = r.dz;
      }
      double d = 0.0;
      for (int j = 0; j <= len; ++j) d = std::max(d, (Yn[j] - X[j]).norm());
      std::swap(X, Yn);
      win.distances.push_back(d);
      win.iterations = it;
      if (prev > popts.noise_floor && d > popts.noise_floor) {
        double ratio = d / prev;
        win.ratios.push_back(ratio);
        if (popts.adaptive && ratio > popts.target_ratio && len > 1) {
          restart = true;
          break;
        }
        bad_run = ratio >= 1.0 ? bad_run + 1 : 0;
        if (bad_run >= 10) throw NoContraction("solve_skorokhod_picard: contraction factor >= 1 over 10 iterates");
      }
      prev = d;
      if (d < stop) break;
    }
    if (restart) {
      w = std::max(1, len / 2);
      ++halvings;
      continue;
    }
    for (int j = 0; j < len; ++j) {
      Y[k0 + j + 1] = X[j + 1];
      dZ[k0 + j] = dz[j];
    }
    win.halvings = halvings;
    halvings = 0;
    for (double r : win.ratios) res.max_ratio = std::max(res.max_ratio, r);
    res.windows.push_back(std::move(win));
    k0 += len;
  }
  finish_path(dom, opts, res.path);
  return res;
}

double sup_distance(const ReflectedPath& a, const ReflectedPath& b) {
  double d = 0.0;
  bool same = a.grid.nodes() == b.grid.nodes();
  for (int k = 0; k <= a.grid.n_steps(); ++k) {
    Vec bk = same ? b.points[k] : b.at(a.grid[k]);
    d = std::max(d, (a.points[k] - bk).norm());
  }
  return d;
}

FlowReport flow_check(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                      const Control& control, double t0, const Vec& x, const TimeGrid& grid, double s_mid) {
  if (!(s_mid > grid.t0() && s_mid < grid.T())) throw Error("flow_check: need t0 < s_mid < T");
  ReflectedPath full = solve_reflected_ode(dom, field, coeffs, control, t0, x, grid);
  TimeGrid rg = grid.restart_at(s_mid);
  ReflectedPath rest = solve_reflected_ode(dom, field, coeffs, control, s_mid, full.at(s_mid), rg);
  FlowReport rep;
  const auto& nd = grid.nodes();
  int j = 1;
  for (int k = 0; k <= grid.n_steps(); ++k) {
    if (nd[k] <= s_mid) continue;
    rep.defect = std::max(rep.defect, (full.points[k] - rest.points[j]).norm());
    ++rep.matched_nodes;
    ++j;
  }
  return rep;
}

double holder_half_quotient(const ReflectedPath& p, int max_nodes) {
  int n = p.grid.n_steps() + 1;
  int stride = std::max(1, (n + max_nodes - 1) / max_nodes);
  double q = 0.0;
  for (int i = 0; i < n; i += stride)
    for (int j = i + stride; j < n; j += stride) {
      double dt = p.grid[j] - p.grid[i];
      q = std::max(q, (p.points[j] - p.points[i]).norm() / std::sqrt(dt));
    }
  return q;
}

double short_time_constant(const ReflectedPath& p, const std::vector<double>& deltas) {
  double K = 0.0;
  const Vec& x = p.points.front();
  double t0 = p.grid.t0();
  for (double delta : deltas) {
    double sup = 0.0;
    for (int k = 0; k <= p.grid.n_steps() && p.grid[k] <= t0 + delta * (1 + 1e-12); ++k)
      sup = std::max(sup, (p.points[k] - x).norm());
    K = std::max(K, sup / std::sqrt(delta));
  }
  return K;
}

double continuity_quotient(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                           const Control& control, double t0, const Vec& x, const TimeGrid& grid,
                           const std::vector<Perturbation>& perturbations) {
  ReflectedPath base = solve_reflected_ode(dom, field, coeffs, control, t0, x, grid);
  double q = 0.0;
  for (const auto& pr : perturbations) {
    double denom = (pr.x - x).squaredNorm() + std::pow(std::abs(pr.t - t0), 0.25);
    if (denom <= 0) continue;
    TimeGrid g2 = pr.t > grid.t0() ? grid.restart_at(pr.t) : grid;
    ReflectedPath other = solve_reflected_ode(dom, field, coeffs, control, g2.t0(), pr.x, g2);
    double sup = 0.0;
    for (int k = 0; k <= grid.n_steps(); ++k) {
      if (grid[k] < g2.t0()) continue;
      sup = std::max(sup, (base.points[k] - other.at(grid[k])).norm());
    }
    q = std::max(q, sup * sup / denom);
  }
  return q;
}

PathCheck check_path(const Domain& dom, const ObliqueField& field, const ReflectedPath& p) {
  PathCheck c;
  double tv = 0.0;
  for (int k = 0; k <= p.grid.n_steps(); ++k) c.min_signed_distance = std::min(c.min_signed_distance, dom.signed_distance(p.points[k]));
  for (int k = 0; k < p.grid.n_steps(); ++k) {
    const Vec& dz = p.increments[k];
    double nz = dz.norm();
    tv += nz;
    if (nz == 0) continue;
    if (!p.boundary_flags[k + 1]) c.interior_variation += nz;
    Vec g = field(p.points[k + 1]);
    double angle;
    if (dz.size() == 1) {
      angle = dz(0) * g(0) > 0 ? 0.0 : std::numbers::pi;
    } else {
      double cross = dz(0) * g(1) - dz(1) * g(0);
      angle = std::atan2(std::abs(cross), dz.dot(g));
    }
    c.max_angle = std::max(c.max_angle, angle);
  }
  c.variation_consistent = tv == p.total_variation;
  return c;
}

void write_path_csv(std::ostream& os, const ReflectedPath& p) {
  int d = static_cast<int>(p.points.front().size());
  os << "t";
  for (int i = 0; i < d; ++i) os << ",x" << i + 1;
  for (int i = 0; i < d; ++i) os << ",dz" << i + 1;
  os << ",z_cum,on_boundary\n";
  os.precision(17);
  for (int k = 0; k <= p.grid.n_steps(); ++k) {
    os << p.grid[k];
    for (int i = 0; i < d; ++i) os << ',' << p.points[k](i);
    for (int i = 0; i < d; ++i) os << ',' << (k == 0 ? 0.0 : p.increments[k - 1](i));
    os << ',' << p.cumulative[k] << ',' << static_cast<int>(p.boundary_flags[k]) << '\n';
  }
}

}  // namespace rldp
