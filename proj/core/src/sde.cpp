#include "rldp/sde.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "rldp/rng.hpp"

namespace rldp {

NoiseScale::NoiseScale(double e) : eps(e) {
  if (!(e >= 0) || !std::isfinite(e)) throw Error("NoiseScale: eps must be finite and nonnegative");
}

ReferencePath::ReferencePath(TimeGrid grid, std::vector<Vec> points) : grid_(std::move(grid)), points_(std::move(points)) {
  if (static_cast<int>(points_.size()) != grid_.n_steps() + 1) throw Error("ReferencePath: one point per node required");
}

ReferencePath ReferencePath::constant(const Vec& x, double t0, double T) {
  return ReferencePath(TimeGrid::uniform(t0, T, 1), {x, x});
}

ReferencePath ReferencePath::linear(const Vec& x0, const Vec& v, double t0, double T, int n) {
  TimeGrid g = TimeGrid::uniform(t0, T, n);
  std::vector<Vec> pts;
  for (int k = 0; k <= n; ++k) pts.push_back(x0 + v * (g[k] - t0));
  return ReferencePath(std::move(g), std::move(pts));
}

ReferencePath ReferencePath::from_path(const ReflectedPath& p) { return ReferencePath(p.grid, p.points); }

Vec ReferencePath::operator()(double t) const {
  const auto& nd = grid_.nodes();
  if (t <= nd.front()) return points_.front();
  if (t >= nd.back()) return points_.back();
  int k = grid_.cell(t);
  double w = (t - nd[k]) / (nd[k + 1] - nd[k]);
  return (1 - w) * points_[k] + w * points_[k + 1];
}

EventSpec EventSpec::ball(ReferencePath g, double r, std::string id) {
  EventSpec e;
  e.kind = EventKind::ball;
  e.references.push_back(std::move(g));
  e.radii.push_back(r);
  e.id = std::move(id);
  if (!(r > 0)) throw ConfigError("event radius must be positive");
  return e;
}

EventSpec EventSpec::complements(std::vector<ReferencePath> g, std::vector<double> r, std::string id) {
  if (g.empty() || g.size() != r.size()) throw ConfigError("complement event: need matching nonempty references and radii");
  for (double ri : r)
    if (!(ri > 0)) throw ConfigError("event radius must be positive");
  EventSpec e;
  e.kind = EventKind::intersection_of_complements;
  e.references = std::move(g);
  e.radii = std::move(r);
  e.id = std::move(id);
  return e;
}

void EventSpec::validate(const Domain& dom) const {
  if (kind == EventKind::ball && references.size() != 1) throw ConfigError("ball event needs exactly one reference");
  for (const auto& g : references)
    for (const auto& p : g.points())
      if (dom.signed_distance(p) < -1e-9) throw ConfigError("event reference leaves the closed domain");
}

EventTracker::EventTracker(const EventSpec& ev) : ev_(&ev), escaped_(ev.references.size(), 0) {}

void EventTracker::observe(double t, const Vec& x) {
  if (decided_) return;
  if (ev_->kind == EventKind::ball) {
    if (!ev_->in_tube(0, t, x)) {
      left_ball_ = true;
      decided_ = true;
    }
    return;
  }
  for (size_t i = 0; i < escaped_.size(); ++i)
    if (!escaped_[i] && !ev_->in_tube(static_cast<int>(i), t, x)) {
      escaped_[i] = 1;
      ++n_escaped_;
    }
  if (n_escaped_ == static_cast<int>(escaped_.size())) decided_ = true;
}

bool EventTracker::hit() const {
  if (ev_->kind == EventKind::ball) return !left_ball_;
  return n_escaped_ == static_cast<int>(escaped_.size());
}

bool event_hit(const ReflectedPath& path, const EventSpec& event) {
  EventTracker tr(event);
  for (int k = 0; k <= path.grid.n_steps() && !tr.decided(); ++k) tr.observe(path.grid[k], path.points[k]);
  return tr.hit();
}

namespace {

inline Vec noisy_step(const CoefficientField& coeffs, double eps, double t, double h, const Vec& X,
                      std::uint64_t seed, std::uint64_t traj, int k) {
  Vec p = X + coeffs.b_eps(eps, t, X) * h;
  if (eps != 0.0) {
    int m = coeffs.m();
    auto z = normal_pair(seed, traj, static_cast<std::uint32_t>(k));
    Vec xi(m);
    for (int i = 0; i < m; ++i) xi(i) = z[i];
    p += eps * std::sqrt(h) * (coeffs.sigma_eps(eps, t, X) * xi);
  }
  return p;
}

}  // namespace

ReflectedPath simulate_reflected_sde(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                     NoiseScale eps, double t0, const Vec& x, const TimeGrid& grid,
                                     std::uint64_t seed, std::uint64_t trajectory, const ReflectOptions& opts) {
  if (coeffs.m() > 2) throw Error("simulate_reflected_sde: noise dimension above 2 is unsupported");
  if (std::abs(grid.t0() - t0) > 1e-12) throw Error("time grid does not start at t0");
  if (dom.signed_distance(x) < -opts.tol_feas) throw Error("initial point lies outside the closed domain");
  ReflectedPath path;
  path.grid = grid;
  int n = grid.n_steps();
  path.points.assign(n + 1, x);
  path.increments.assign(n, Vec::Zero(x.size()));
  path.cumulative.assign(n + 1, 0.0);
  path.boundary_flags.assign(n + 1, 0);
  Vec X = x;
  double tv = 0.0;
  for (int k = 0; k < n; ++k) {
    Vec p = noisy_step(coeffs, eps.eps, grid[k], grid.dt(k), X, seed, trajectory, k);
    StepResult r = reflect_step(dom, field, p);
    X = r.q;
    path.points[k + 1] = X;
    path.increments[k] = r.dz;
    tv += r.dz.norm();
    path.cumulative[k + 1] = tv;
  }
  path.total_variation = tv;
  for (int k = 0; k <= n; ++k) path.boundary_flags[k] = dom.signed_distance(path.points[k]) <= opts.tol_bdry;
  return path;
}

McEstimate make_estimate(long hits, long n) {
  McEstimate e;
  e.n_samples = n;
  e.n_hits = hits;
  e.p_hat = n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  e.ci_half_width = n > 0 ? 1.96 * std::sqrt(e.p_hat * (1 - e.p_hat) / static_cast<double>(n)) : 0.0;
  e.zero_hits = hits == 0;
  return e;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

McEstimate estimate_event_probability(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                      NoiseScale eps, double t0, const Vec& x, const TimeGrid& grid,
                                      const EventSpec& event, long n_samples, std::uint64_t seed, int threads) {
  if (n_samples < 100) throw Error("estimate_event_probability: need n_samples >= 100");
  if (coeffs.m() > 2) throw Error("estimate_event_probability: noise dimension above 2 is unsupported");
  if (std::abs(grid.t0() - t0) > 1e-12) throw Error("time grid does not start at t0");
  if (dom.signed_distance(x) < -1e-8) throw Error("initial point lies outside the closed domain");
  int nt = std::min<long>(resolve_threads(threads), n_samples);
  std::vector<long> hits(nt, 0);
  auto work = [&](int w) {
    long lo = n_samples * w / nt, hi = n_samples * (w + 1) / nt;
    long h = 0;
    for (long traj = lo; traj < hi; ++traj) {
      EventTracker tr(event);
      Vec X = x;
      tr.observe(grid[0], X);
      for (int k = 0; k < grid.n_steps() && !tr.decided(); ++k) {
        Vec p = noisy_step(coeffs, eps.eps, grid[k], grid.dt(k), X, seed, static_cast<std::uint64_t>(traj), k);
        X = reflect_step(dom, field, p).q;
        tr.observe(grid[k + 1], X);
      }
      h += tr.hit() ? 1 : 0;
    }
    hits[w] = h;
  };
  if (nt == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  long total = 0;
  for (long h : hits) total += h;
  return make_estimate(total, n_samples);
}

LogRate log_rate_estimate(const McEstimate& est, NoiseScale eps) {
  if (!(est.p_hat > 0)) throw InfiniteEstimate("log_rate_estimate: zero hits, log-rate is infinite");
  double e2 = eps.eps * eps.eps;
  LogRate r;
  r.value = -e2 * std::log(est.p_hat);
  r.lo = -e2 * std::log(std::min(1.0, est.p_hat + est.ci_half_width));
  double lower_p = est.p_hat - est.ci_half_width;
  r.hi = lower_p > 0 ? -e2 * std::log(lower_p) : kInf;
  return r;
}

}  // namespace rldp
