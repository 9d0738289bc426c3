#include "rldp/rate.hpp"

#include <ceres/ceres.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace rldp {

double path_rate(const Control& control) { return control.action(); }

namespace {

enum class TargetKind { path, ball, complement };

struct Target {
  TargetKind kind = TargetKind::path;
  std::vector<ReferencePath> refs;
  std::vector<double> radii;
};

// Forward model for piecewise-constant controls: one state solve per evaluation,
// with segment-start checkpoints so finite differences only redo the suffix.
class Evaluator {
 public:
  Evaluator(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs, double t0, const Vec& x,
            double T, int nseg, int substeps, Target target, double tol)
      : dom_(dom), field_(field), coeffs_(coeffs), x_(x), nseg_(nseg), sub_(substeps), m_(coeffs.m()),
        grid_(TimeGrid::uniform(t0, T, nseg * substeps)), target_(std::move(target)), tol_(tol) {
    seg_dt_ = (T - t0) / nseg;
    for (const auto& g : target_.refs) {
      std::vector<Vec> v;
      v.reserve(grid_.n_steps() + 1);
      for (double t : grid_.nodes()) v.push_back(g(t));
      ref_.push_back(std::move(v));
    }
  }

  int n_params() const { return nseg_ * m_; }
  int nseg() const { return nseg_; }
  double seg_dt() const { return seg_dt_; }
  const TimeGrid& grid() const { return grid_; }

  struct Checkpoints {
    std::vector<Vec> state;
    std::vector<std::vector<double>> sups;
  };

  // Returns per-target sup deviations; fills checkpoints when cp != nullptr.
  std::vector<double> run(const double* a, int from, const Vec& y0, std::vector<double> sups, Checkpoints* cp,
                          std::vector<Vec>* path = nullptr) const {
    Vec y = y0;
    Vec alpha(m_);
    const int K = static_cast<int>(ref_.size());
    for (int seg = from; seg < nseg_; ++seg) {
      if (cp) {
        cp->state[seg] = y;
        cp->sups[seg] = sups;
      }
      for (int j = 0; j < m_; ++j) alpha(j) = a[seg * m_ + j];
      for (int s = 0; s < sub_; ++s) {
        int i = seg * sub_ + s;
        double t = grid_[i], h = grid_.dt(i);
        Vec p = y + (coeffs_.b(t, y) - coeffs_.sigma(t, y) * alpha) * h;
        y = reflect_step(dom_, field_, p).q;
        for (int k = 0; k < K; ++k) sups[k] = std::max(sups[k], (y - ref_[k][i + 1]).norm());
        if (path) path->push_back(y);
      }
    }
    return sups;
  }

  std::vector<double> initial_sups() const {
    std::vector<double> s;
    for (const auto& r : ref_) s.push_back((x_ - r[0]).norm());
    return s;
  }

  std::vector<double> sups(const double* a, Checkpoints* cp = nullptr) const {
    if (cp) {
      cp->state.assign(nseg_, x_);
      cp->sups.assign(nseg_, {});
    }
    return run(a, 0, x_, initial_sups(), cp);
  }

  double penalty(const std::vector<double>& s, double w) const {
    switch (target_.kind) {
      case TargetKind::path: return w * s[0] * s[0];
      case TargetKind::ball: {
        double v = std::max(0.0, s[0] - target_.radii[0] + tol_);
        return w * v * v;
      }
      case TargetKind::complement: {
        double acc = 0.0;
        for (size_t i = 0; i < s.size(); ++i) {
          double v = std::max(0.0, target_.radii[i] + tol_ - s[i]);
          acc += v * v;
        }
        return w * acc;
      }
    }
    return 0.0;
  }

  // Distance of the path from the target set, without the tolerance margin.
  double residual(const std::vector<double>& s) const {
    switch (target_.kind) {
      case TargetKind::path: return s[0];
      case TargetKind::ball: return std::max(0.0, s[0] - target_.radii[0]);
      case TargetKind::complement: {
        double r = 0.0;
        for (size_t i = 0; i < s.size(); ++i) r = std::max(r, target_.radii[i] - s[i]);
        return std::max(0.0, r);
      }
    }
    return kInf;
  }

  double action(const double* a) const {
    double acc = 0.0;
    for (int i = 0; i < n_params(); ++i) acc += a[i] * a[i];
    return 0.5 * acc * seg_dt_;
  }

  // Time at which every complement tube has been left (last activation), or T.
  double last_activation(const double* a) const {
    std::vector<Vec> path{x_};
    run(a, 0, x_, initial_sups(), nullptr, &path);
    double theta = grid_.t0();
    for (size_t k = 0; k < ref_.size(); ++k) {
      double first = grid_.T();
      for (int i = 0; i <= grid_.n_steps(); ++i)
        if ((path[i] - ref_[k][i]).norm() >= target_.radii[k]) {
          first = grid_[i];
          break;
        }
      theta = std::max(theta, first);
    }
    return theta;
  }

  Control to_control(const std::vector<double>& a) const {
    TimeGrid g = TimeGrid::uniform(grid_.t0(), grid_.T(), nseg_);
    Control c{g, {}};
    for (int seg = 0; seg < nseg_; ++seg) {
      Vec v(m_);
      for (int j = 0; j < m_; ++j) v(j) = a[seg * m_ + j];
      c.values.push_back(v);
    }
    return c;
  }

  const Target& target() const { return target_; }
  const Vec& x() const { return x_; }

 private:
  const Domain& dom_;
  const ObliqueField& field_;
  const CoefficientField& coeffs_;
  Vec x_;
  int nseg_, sub_, m_;
  TimeGrid grid_;
  Target target_;
  double tol_;
  double seg_dt_ = 0.0;
  std::vector<std::vector<Vec>> ref_;
};

class PenalizedCost : public ceres::FirstOrderFunction {
 public:
  PenalizedCost(const Evaluator& ev, double w, double h) : ev_(ev), w_(w), h_(h) {}

  bool Evaluate(const double* a, double* cost, double* gradient) const override {
    Evaluator::Checkpoints cp;
    auto s = ev_.sups(a, gradient ? &cp : nullptr);
    *cost = ev_.action(a) + ev_.penalty(s, w_);
    if (!std::isfinite(*cost)) return false;
    if (!gradient) return true;
    const int n = ev_.n_params();
    const int m = n / ev_.nseg();
    std::vector<double> ap(a, a + n);
    for (int i = 0; i < n; ++i) {
      int seg = i / m;
      double orig = ap[i];
      ap[i] = orig + h_;
      double jp = ev_.penalty(ev_.run(ap.data(), seg, cp.state[seg], cp.sups[seg], nullptr), w_);
      ap[i] = orig - h_;
      double jm = ev_.penalty(ev_.run(ap.data(), seg, cp.state[seg], cp.sups[seg], nullptr), w_);
      ap[i] = orig;
      gradient[i] = a[i] * ev_.seg_dt() + (jp - jm) / (2 * h_);
    }
    return true;
  }

  int NumParameters() const override { return ev_.n_params(); }

 private:
  const Evaluator& ev_;
  double w_, h_;
};

struct LadderOutcome {
  std::vector<double> a;
  double residual = kInf;
  double value = kInf;
  bool feasible = false;
  int iterations = 0;
  int weight_index = -1;
};

LadderOutcome run_ladder(const Evaluator& ev, std::vector<double> a, const RateOptions& opts, double tol,
                         int first_weight = 0) {
  LadderOutcome out;
  for (int wi = first_weight; wi < static_cast<int>(opts.weights.size()); ++wi) {
    ceres::GradientProblem problem(new PenalizedCost(ev, opts.weights[wi], opts.fd_step));
    ceres::GradientProblemSolver::Options o;
    o.line_search_direction_type = ceres::LBFGS;
    o.max_num_iterations = opts.max_iterations;
    o.logging_type = ceres::SILENT;
    o.minimizer_progress_to_stdout = false;
    o.function_tolerance = 1e-12;
    o.gradient_tolerance = 1e-12;
    o.parameter_tolerance = 1e-12;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(o, problem, a.data(), &summary);
    out.iterations += static_cast<int>(summary.iterations.size());
    auto s = ev.sups(a.data());
    out.residual = ev.residual(s);
    out.weight_index = wi;
    if (out.residual <= tol) {
      out.feasible = true;
      break;
    }
  }
  out.value = out.feasible ? ev.action(a.data()) : kInf;
  out.a = std::move(a);
  return out;
}

std::vector<std::vector<double>> make_starts(const Evaluator& ev, const Domain& dom, const CoefficientField& coeffs,
                                             const RateOptions& opts, double t0, double T) {
  const int nseg = ev.nseg(), m = coeffs.m(), n = ev.n_params();
  std::vector<std::vector<double>> starts;
  starts.emplace_back(n, 0.0);
  const Target& tg = ev.target();

  if (tg.kind != TargetKind::complement) {
    // alpha0 = sigma^T (sigma sigma^T)^{-1} (b - g') on interior segments
    std::vector<double> a(n, 0.0);
    bool ok = true;
    const ReferencePath& g = tg.refs[0];
    double dt = (T - t0) / nseg;
    for (int seg = 0; seg < nseg && ok; ++seg) {
      double tm = t0 + (seg + 0.5) * dt;
      Vec gm = g(tm);
      if (dom.signed_distance(gm) <= 1e-9) continue;
      Vec gdot = (g(t0 + (seg + 1) * dt) - g(t0 + seg * dt)) / dt;
      Mat s = coeffs.sigma(tm, gm);
      Mat ss = s * s.transpose();
      if (std::abs(ss.determinant()) < 1e-12) {
        ok = false;
        break;
      }
      Vec alpha = s.transpose() * ss.inverse() * (coeffs.b(tm, gm) - gdot);
      for (int j = 0; j < m; ++j) a[seg * m + j] = alpha(j);
    }
    if (ok) starts.push_back(std::move(a));
  } else if (opts.escape_starts) {
    double r = *std::max_element(tg.radii.begin(), tg.radii.end());
    double sn = std::max(1e-12, coeffs.sigma(t0, ev.x()).norm());
    double amp = 1.1 * r / ((T - t0) * sn);
    for (int j = 0; j < m; ++j)
      for (double sign : {1.0, -1.0}) {
        std::vector<double> a(n, 0.0);
        for (int seg = 0; seg < nseg; ++seg) a[seg * m + j] = sign * amp;
        starts.push_back(std::move(a));
      }
  }
  return starts;
}

RateResult optimize(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs, double t0,
                    const Vec& x, double T, double tol, const RateOptions& opts, const Target& target) {
  int nseg = opts.segments;
  std::ostringstream diag;
  auto ev = std::make_unique<Evaluator>(dom, field, coeffs, t0, x, T, nseg, opts.substeps, target, tol);
  auto starts = make_starts(*ev, dom, coeffs, opts, t0, T);

  std::vector<LadderOutcome> outcomes(starts.size());
  auto job = [&](size_t i) { outcomes[i] = run_ladder(*ev, starts[i], opts, tol); };
  if (opts.threads > 1 && starts.size() > 1) {
    std::vector<std::thread> pool;
    for (size_t i = 0; i < starts.size(); ++i) pool.emplace_back(job, i);
    for (auto& t : pool) t.join();
  } else {
    for (size_t i = 0; i < starts.size(); ++i) job(i);
  }

  RateResult res;
  int best = -1;
  int total_iter = 0;
  for (size_t i = 0; i < outcomes.size(); ++i) {
    total_iter += outcomes[i].iterations;
    diag << "start " << i << ": value=" << outcomes[i].value << " residual=" << outcomes[i].residual << "; ";
    if (!outcomes[i].feasible) continue;
    if (best < 0 || outcomes[i].value < outcomes[best].value) best = static_cast<int>(i);
  }
  res.iterations = total_iter;
  if (best < 0) {
    double rmin = kInf;
    for (auto& o : outcomes) rmin = std::min(rmin, o.residual);
    res.constraint_residual = rmin;
    res.segments = nseg;
    res.diagnostics = diag.str() + "infeasible after max weight";
    return res;
  }
  LadderOutcome cur = outcomes[best];
  res.winning_start = best;

  while (opts.refine && nseg * 2 <= opts.max_segments) {
    int n2 = nseg * 2, m = coeffs.m();
    auto ev2 = std::make_unique<Evaluator>(dom, field, coeffs, t0, x, T, n2, opts.substeps, target, tol);
    std::vector<double> a2(n2 * m);
    for (int seg = 0; seg < n2; ++seg)
      for (int j = 0; j < m; ++j) a2[seg * m + j] = cur.a[(seg / 2) * m + j];
    LadderOutcome nxt = run_ladder(*ev2, a2, opts, tol, std::max(0, cur.weight_index));
    res.iterations += nxt.iterations;
    if (!nxt.feasible) break;
    double change = std::abs(nxt.value - cur.value);
    diag << "refine " << n2 << ": value=" << nxt.value << "; ";
    cur = std::move(nxt);
    nseg = n2;
    ev = std::move(ev2);
    if (change <= opts.refine_rel * std::max(cur.value, 1e-12)) break;
  }

  if (target.kind == TargetKind::complement) {
    double theta = ev->last_activation(cur.a.data());
    std::vector<double> a = cur.a;
    int m = coeffs.m();
    double dt = (T - t0) / nseg;
    for (int seg = 0; seg < nseg; ++seg)
      if (t0 + seg * dt >= theta)
        for (int j = 0; j < m; ++j) a[seg * m + j] = 0.0;
    double r = ev->residual(ev->sups(a.data()));
    double v = ev->action(a.data());
    if (r <= tol && v < cur.value) {
      cur.a = a;
      cur.value = v;
      cur.residual = r;
      res.zero_tail_applied = true;
    }
  }

  res.feasible = true;
  res.value = cur.value;
  res.constraint_residual = cur.residual;
  res.optimizer = ev->to_control(cur.a);
  res.segments = nseg;
  res.diagnostics = diag.str();
  return res;
}

}  // namespace

RateResult rate_of_path(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs, double t0,
                        const Vec& x, const ReferencePath& g, double T, double tol, const RateOptions& opts) {
  if ((g(t0) - x).norm() > tol) {
    RateResult r;
    r.diagnostics = "reference path does not start at x";
    return r;
  }
  Target tg;
  tg.kind = TargetKind::path;
  tg.refs.push_back(g);
  return optimize(dom, field, coeffs, t0, x, T, tol, opts, tg);
}

RateResult rate_of_event(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs, double t0,
                         const Vec& x, const EventSpec& event, double T, double tol, const RateOptions& opts) {
  Target tg;
  tg.kind = event.kind == EventKind::ball ? TargetKind::ball : TargetKind::complement;
  tg.refs = event.references;
  tg.radii = event.radii;
  return optimize(dom, field, coeffs, t0, x, T, tol, opts, tg);
}

double event_residual(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs, double t0,
                      const Vec& x, const EventSpec& event, const Control& control, int substeps) {
  Target tg;
  tg.kind = event.kind == EventKind::ball ? TargetKind::ball : TargetKind::complement;
  tg.refs = event.references;
  tg.radii = event.radii;
  int nseg = control.grid.n_steps();
  Evaluator ev(dom, field, coeffs, t0, x, control.grid.T(), nseg, substeps, tg, 0.0);
  std::vector<double> a;
  for (const auto& v : control.values)
    for (int j = 0; j < v.size(); ++j) a.push_back(v(j));
  return ev.residual(ev.sups(a.data()));
}

std::vector<int> dyadic_ladder(int n_max) {
  std::vector<int> out;
  for (int n = 1; n <= n_max; n *= 2) out.push_back(n);
  return out;
}

WeakStabilityReport weak_stability_check(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                         double t0, const Vec& x, double T, double c,
                                         const std::vector<int>& n_values, int n_steps) {
  if (n_values.size() < 2) throw Error("weak_stability_check: need at least two n values");
  TimeGrid grid = TimeGrid::uniform(t0, T, n_steps);
  const int m = coeffs.m();
  ReflectedPath y0 = solve_reflected_ode(dom, field, coeffs, Control::zero(grid, m), t0, x, grid);
  WeakStabilityReport rep;
  rep.n_values = n_values;
  for (int n : n_values) {
    Control a{grid, {}};
    for (int k = 0; k < n_steps; ++k) {
      double s = 0.5 * (grid[k] + grid[k + 1]);
      a.values.push_back(Vec::Constant(m, c * std::sin(n * s)));
    }
    rep.sup_dists.push_back(sup_distance(solve_reflected_ode(dom, field, coeffs, a, t0, x, grid), y0));
  }
  const auto& d = rep.sup_dists;
  int from = static_cast<int>(d.size()) - 1;
  while (from > 0 && d[from] <= d[from - 1]) --from;
  rep.decreasing_from = n_values[from];
  rep.eventually_decreasing = from < static_cast<int>(d.size()) - 1 || d.size() == 1;
  rep.final_quarter = d.back() <= 0.25 * d.front();
  return rep;
}

}  // namespace rldp
