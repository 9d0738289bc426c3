#include "rldp/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rldp/rng.hpp"

namespace rldp {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::consistent: return "consistent";
    case Verdict::inconsistent: return "inconsistent";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.eps_ladder.empty()) throw ConfigError("eps_ladder: must not be empty");
  for (size_t i = 0; i < cfg.eps_ladder.size(); ++i) {
    if (!(cfg.eps_ladder[i] > 0)) throw ConfigError("eps_ladder: entries must be positive");
    if (i > 0 && !(cfg.eps_ladder[i] < cfg.eps_ladder[i - 1]))
      throw ConfigError("eps_ladder: must be strictly decreasing");
  }
  if (!(cfg.T > cfg.t0)) throw ConfigError("T: must exceed t0");
  if (cfg.n_samples < 100) throw ConfigError("n_samples: at least 100 required");
  if (cfg.n_steps < 1) throw ConfigError("n_steps: must be positive");
  if (!(cfg.rate_tol > 0)) throw ConfigError("rate_tol: must be positive");
  if (!(cfg.rel_slack >= 0)) throw ConfigError("rel_slack: must be nonnegative");
  if (cfg.x0.size() != cfg.domain.dim()) throw ConfigError("x0: dimension does not match the domain");
  if (!cfg.domain.contains(cfg.x0, 1e-12)) throw ConfigError("x0: must lie in the closed domain");
  if (cfg.dp_steps < 1) throw ConfigError("dp_steps: must be positive");
  if (cfg.ball) cfg.ball->validate(cfg.domain);
  if (cfg.complements) cfg.complements->validate(cfg.domain);
}

std::vector<double> default_dp_magnitudes(const ExperimentConfig& cfg) {
  double rmax = 0.0;
  for (const auto* ev : {cfg.ball ? &*cfg.ball : nullptr, cfg.complements ? &*cfg.complements : nullptr})
    if (ev)
      for (double r : ev->radii) rmax = std::max(rmax, r);
  if (rmax == 0) rmax = 0.5;
  double sig = std::max(1e-12, cfg.coeffs.sigma(cfg.t0, cfg.x0).norm());
  double unit = 2 * rmax / ((cfg.T - cfg.t0) * sig);
  int levels = cfg.domain.dim() == 1 ? 8 : 2;
  std::vector<double> out;
  for (int k = 1; k <= levels; ++k) out.push_back(unit * k / levels);
  return out;
}

namespace {

struct Ladder {
  std::vector<LadderEntry> entries;
  bool any_zero = false;
};

Ladder run_ladder(const ExperimentConfig& cfg, const EventSpec& ev) {
  Ladder out;
  TimeGrid grid = TimeGrid::uniform(cfg.t0, cfg.T, cfg.n_steps);
  for (double eps : cfg.eps_ladder) {
    LadderEntry e;
    e.eps = eps;
    e.estimate = estimate_event_probability(cfg.domain, cfg.field, cfg.coeffs, NoiseScale(eps), cfg.t0, cfg.x0, grid,
                                            ev, cfg.n_samples, cfg.seed, cfg.threads);
    if (e.estimate.zero_hits) {
      out.any_zero = true;
    } else {
      e.finite = true;
      e.log_rate = log_rate_estimate(e.estimate, NoiseScale(eps));
    }
    out.entries.push_back(e);
  }
  return out;
}

GridParams grid_for(const ExperimentConfig& cfg, int factor) {
  GridParams gp = cfg.grid;
  gp.t0 = cfg.t0;
  gp.T = cfg.T;
  if (gp.cells == 0) gp.cells = cfg.domain.dim() == 1 ? 200 : 80;
  gp.cells *= factor;
  if (factor != 1) gp.dt = 0.0;
  return gp;
}

// Nonincreasing or nondecreasing, with differences inside the joint CI treated as ties.
bool is_monotone(const std::vector<LadderEntry>& l) {
  int up = 0, down = 0;
  for (size_t i = 1; i < l.size(); ++i) {
    if (!l[i].finite || !l[i - 1].finite) return false;
    double d = l[i].log_rate.value - l[i - 1].log_rate.value;
    double noise = (l[i].log_rate.hi - l[i].log_rate.lo + l[i - 1].log_rate.hi - l[i - 1].log_rate.lo) / 2;
    if (d > noise) ++up;
    if (d < -noise) ++down;
  }
  return up == 0 || down == 0;
}

double half_width(const LogRate& r) { return std::max(r.hi - r.value, r.value - r.lo); }

void finish(LdpReport& rep, const ExperimentConfig& cfg, bool upper) {
  const LadderEntry& last = rep.ladder.back();
  rep.monotone = is_monotone(rep.ladder);
  if (last.finite) {
    rep.smallest_eps_rate = last.log_rate.value;
    rep.slack.statistical = half_width(last.log_rate);
  }
  if (std::isfinite(rep.lambda_value)) rep.slack.relative = cfg.rel_slack * rep.lambda_value;
  if (std::isfinite(rep.lambda_value) && last.finite)
    rep.two_sided_gap = std::abs(rep.smallest_eps_rate - rep.lambda_value);

  if (cfg.richardson) {
    std::vector<const LadderEntry*> fin;
    for (const auto& e : rep.ladder)
      if (e.finite) fin.push_back(&e);
    if (fin.size() >= 2) {
      const LadderEntry& a = *fin[fin.size() - 2];
      const LadderEntry& b = *fin.back();
      double ea = a.eps * a.eps, eb = b.eps * b.eps;
      rep.extrapolated = b.log_rate.value - (a.log_rate.value - b.log_rate.value) * eb / (ea - eb);
    }
  }

  const double slack = rep.slack.total();
  std::vector<double> vals;
  if (last.finite) vals.push_back(rep.smallest_eps_rate);
  if (std::isfinite(rep.lambda_value)) vals.push_back(rep.lambda_value);
  if (std::isfinite(rep.dp_value) && rep.dp_value < rep.cap) vals.push_back(rep.dp_value);
  rep.pairwise_ok = true;
  for (size_t i = 0; i < vals.size(); ++i)
    for (size_t j = i + 1; j < vals.size(); ++j)
      if (std::abs(vals[i] - vals[j]) > slack) rep.pairwise_ok = false;

  bool any_zero = std::any_of(rep.ladder.begin(), rep.ladder.end(), [](const LadderEntry& e) { return !e.finite; });
  if (any_zero) {
    rep.verdict = Verdict::inconclusive;
    rep.details.push_back("zero hits at some ladder entry; log-rate undefined there");
    return;
  }
  bool ok;
  if (upper)
    ok = !std::isfinite(rep.lambda_value) || rep.smallest_eps_rate <= rep.lambda_value + slack;
  else
    ok = !std::isfinite(rep.lambda_value) ? false : rep.smallest_eps_rate >= rep.lambda_value - slack;
  if (!upper && !std::isfinite(rep.lambda_value))
    rep.details.push_back("lower bound: event has hits but the rate optimizer found no feasible control");
  rep.verdict = ok ? Verdict::consistent : Verdict::inconsistent;
}

double lattice_value(const ValueGrid& g, const Vec& x) { return g.value_t0(x); }

double neg_log(double u, double eps) { return u > 0 ? -eps * eps * std::log(u) : kInf; }

struct EpsValue {
  double value = kInf;
  double cauchy = 0.0;
};

// -eps^2 log of the linear VI at the smallest eps, on the final grid
EpsValue finite_eps_value(const ExperimentConfig& cfg, const EventSpec& ev, bool complement, StopType stop) {
  double eps = cfg.eps_ladder.back();
  auto at = [&](int factor) {
    GridParams gp = grid_for(cfg, factor);
    Obstacle ind = tube_obstacle(ev, 0, 1.0, complement, grid_cell_size(cfg.domain, gp));
    return neg_log(lattice_value(solve_linear_vi(cfg.domain, cfg.field, cfg.coeffs, ind, NoiseScale(eps), stop, gp),
                                 cfg.x0),
                   eps);
  };
  EpsValue r;
  r.value = at(1);
  if (cfg.scheme_refine) {
    double fine = at(2);
    if (std::isfinite(r.value) && std::isfinite(fine)) r.cauchy = std::abs(fine - r.value);
    r.value = fine;
  }
  return r;
}

}  // namespace

LdpReport run_upper_bound_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (!cfg.ball) throw ConfigError("events.ball: upper-bound experiment needs a ball event");
  const EventSpec& ev = *cfg.ball;
  if (ev.kind != EventKind::ball) throw ConfigError("events.ball: event kind must be ball");
  LdpReport rep;
  rep.experiment = "upper_bound";
  rep.event_id = ev.id;
  rep.ladder = run_ladder(cfg, ev).entries;

  RateResult rr = rate_of_event(cfg.domain, cfg.field, cfg.coeffs, cfg.t0, cfg.x0, ev, cfg.T, cfg.rate_tol,
                                cfg.rate_opts);
  rep.lambda_feasible = rr.feasible;
  rep.lambda_value = rr.feasible ? rr.value : kInf;
  rep.rate_residual = rr.constraint_residual;
  if (!rr.diagnostics.empty()) rep.details.push_back("rate: " + rr.diagnostics);

  rep.cap = cfg.cap > 0 ? cfg.cap : (std::isfinite(rep.lambda_value) ? 2 * rep.lambda_value + 1 : 10.0);
  GridParams gp = grid_for(cfg, 1);
  double h = grid_cell_size(cfg.domain, gp);
  Obstacle obs = tube_obstacle(ev, 0, rep.cap, true, h);
  double T = cfg.T;
  auto terminal = [&obs, T](const Vec& x) { return obs(T, x); };
  double v = lattice_value(solve_limit_vi(cfg.domain, cfg.field, cfg.coeffs, obs, ViType::min_type, terminal, gp),
                           cfg.x0);
  if (cfg.scheme_refine) {
    GridParams gp2 = grid_for(cfg, 2);
    Obstacle obs2 = tube_obstacle(ev, 0, rep.cap, true, grid_cell_size(cfg.domain, gp2));
    auto terminal2 = [&obs2, T](const Vec& x) { return obs2(T, x); };
    double v2 = lattice_value(
        solve_limit_vi(cfg.domain, cfg.field, cfg.coeffs, obs2, ViType::min_type, terminal2, gp2), cfg.x0);
    rep.slack.scheme = std::abs(v2 - v);
    v = v2;
  }
  rep.dp_value = v;
  rep.pde_limit_value = v;
  rep.dp_source = "hjbvi min_type, obstacle A 1_{B^c}";

  if (cfg.finite_eps_term) {
    auto fe = finite_eps_value(cfg, ev, false, StopType::inf_stop);
    rep.pde_eps_value = fe.value;
    if (std::isfinite(fe.value)) rep.slack.finite_eps = std::abs(fe.value - rep.pde_limit_value) + fe.cauchy;
  }
  finish(rep, cfg, true);
  return rep;
}

LdpReport run_lower_bound_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (!cfg.complements) throw ConfigError("events.complements: lower-bound experiment needs a complement event");
  const EventSpec& ev = *cfg.complements;
  if (ev.kind != EventKind::intersection_of_complements)
    throw ConfigError("events.complements: event kind must be intersection_of_complements");
  const int N = static_cast<int>(ev.references.size());
  LdpReport rep;
  rep.experiment = "lower_bound";
  rep.event_id = ev.id;
  rep.ladder = run_ladder(cfg, ev).entries;

  RateResult rr = rate_of_event(cfg.domain, cfg.field, cfg.coeffs, cfg.t0, cfg.x0, ev, cfg.T, cfg.rate_tol,
                                cfg.rate_opts);
  rep.lambda_feasible = rr.feasible;
  rep.lambda_value = rr.feasible ? rr.value : kInf;
  rep.rate_residual = rr.constraint_residual;
  if (!rr.diagnostics.empty()) rep.details.push_back("rate: " + rr.diagnostics);
  rep.cap = cfg.cap > 0 ? cfg.cap : (std::isfinite(rep.lambda_value) ? 2 * rep.lambda_value + 1 : 10.0);

  DiscreteProblem p;
  p.grid = TimeGrid::uniform(cfg.t0, cfg.T, cfg.dp_steps);
  auto mags = cfg.dp_magnitudes.empty() ? default_dp_magnitudes(cfg) : cfg.dp_magnitudes;
  p.control_set = default_control_set(cfg.coeffs.m(), mags);
  p.state_rule = make_reflected_state_rule(cfg.domain, cfg.field, cfg.coeffs, p.grid, cfg.dp_substeps);
  for (int i = 0; i < N; ++i) p.obstacles.push_back(tube_indicator(ev, i, rep.cap, false));
  try {
    rep.dp_value = reduced_value(p, 0, cfg.x0);
    rep.dp_source = "control_stop reduced value, obstacles A 1_{B_i}";
  } catch (const StateSpaceTooLarge& e) {
    rep.details.push_back(std::string("control_stop: ") + e.what());
  }

  if (N == 1) {
    GridParams gp = grid_for(cfg, 1);
    double h = grid_cell_size(cfg.domain, gp);
    double T = cfg.T;
    Obstacle obs = tube_obstacle(ev, 0, rep.cap, false, h);
    auto terminal = [&obs, T](const Vec& x) { return obs(T, x); };
    double v = lattice_value(
        solve_limit_vi(cfg.domain, cfg.field, cfg.coeffs, obs, ViType::max_type, terminal, gp), cfg.x0);
    if (cfg.scheme_refine) {
      GridParams gp2 = grid_for(cfg, 2);
      Obstacle obs2 = tube_obstacle(ev, 0, rep.cap, false, grid_cell_size(cfg.domain, gp2));
      auto terminal2 = [&obs2, T](const Vec& x) { return obs2(T, x); };
      double v2 = lattice_value(
          solve_limit_vi(cfg.domain, cfg.field, cfg.coeffs, obs2, ViType::max_type, terminal2, gp2), cfg.x0);
      rep.slack.scheme = std::abs(v2 - v);
      v = v2;
    }
    rep.pde_limit_value = v;
    if (cfg.finite_eps_term) {
      auto fe = finite_eps_value(cfg, ev, true, StopType::sup_stop);
      rep.pde_eps_value = fe.value;
      if (std::isfinite(fe.value)) rep.slack.finite_eps = std::abs(fe.value - v) + fe.cauchy;
    }
  } else {
    rep.details.push_back("PDE cross-check and finite-eps term computed for single-tube events only");
  }
  finish(rep, cfg, false);
  return rep;
}

CapReport cap_identity_check(const ExperimentConfig& cfg, const std::vector<double>& caps, double tolerance) {
  validate_config(cfg);
  if (!cfg.ball) throw ConfigError("events.ball: cap identity check needs a ball event");
  const EventSpec& ev = *cfg.ball;
  CapReport rep;
  rep.eps = cfg.eps_ladder.back();
  rep.tolerance = tolerance;
  auto uncapped_at = [&](int factor) {
    GridParams gp = grid_for(cfg, factor);
    double h = grid_cell_size(cfg.domain, gp);
    Obstacle ind = tube_obstacle(ev, 0, 1.0, false, h);
    return neg_log(
        lattice_value(
            solve_linear_vi(cfg.domain, cfg.field, cfg.coeffs, ind, NoiseScale(rep.eps), StopType::inf_stop, gp),
            cfg.x0),
        rep.eps);
  };
  double T = cfg.T;
  auto capped_at = [&](double A, int factor) {
    GridParams gp = grid_for(cfg, factor);
    double h = grid_cell_size(cfg.domain, gp);
    Obstacle obs = tube_obstacle(ev, 0, A, true, h);
    auto terminal = [&obs, T](const Vec& x) { return obs(T, x); };
    return lattice_value(
        solve_eps_vi(cfg.domain, cfg.field, cfg.coeffs, obs, NoiseScale(rep.eps), ViType::min_type, terminal, gp),
        cfg.x0);
  };
  auto extrapolate = [](double coarse, double fine) {
    return std::isfinite(coarse) && std::isfinite(fine) ? 2 * fine - coarse : fine;
  };
  rep.uncapped_coarse = uncapped_at(1);
  rep.uncapped_fine = uncapped_at(2);
  rep.uncapped = extrapolate(rep.uncapped_coarse, rep.uncapped_fine);
  rep.pass = true;
  for (double A : caps) {
    CapCase c;
    c.A = A;
    c.capped_coarse = capped_at(A, 1);
    c.capped_fine = capped_at(A, 2);
    c.capped = extrapolate(c.capped_coarse, c.capped_fine);
    c.expected = std::min(A, rep.uncapped);
    double err = std::abs(c.capped - c.expected);
    c.rel_error = c.expected > 0 ? err / c.expected : err;
    c.pass = c.expected > 0 ? c.rel_error <= tolerance : err <= 1e-12;
    rep.pass = rep.pass && c.pass;
    rep.cases.push_back(c);
  }
  return rep;
}

GoodnessReport goodness_proxy(const ExperimentConfig& cfg) {
  validate_config(cfg);
  GoodnessReport rep;
  rep.level = cfg.goodness_level;
  rep.weak = weak_stability_check(cfg.domain, cfg.field, cfg.coeffs, cfg.t0, cfg.x0, cfg.T, cfg.weak_amplitude,
                                  dyadic_ladder(cfg.weak_n_max));

  const int m = cfg.coeffs.m();
  const int segments = 32;
  TimeGrid cgrid = TimeGrid::uniform(cfg.t0, cfg.T, segments);
  TimeGrid pgrid = TimeGrid::uniform(cfg.t0, cfg.T, 1024);
  ReflectedPath free = solve_reflected_ode(cfg.domain, cfg.field, cfg.coeffs, Control::zero(cgrid, m), cfg.t0,
                                           cfg.x0, pgrid);

  double bmax = 0.0, smax = 0.0;
  for (const Vec& x : cfg.domain.sample_interior(256)) {
    for (double t : {cfg.t0, 0.5 * (cfg.t0 + cfg.T), cfg.T}) {
      bmax = std::max(bmax, cfg.coeffs.b(t, x).norm());
      smax = std::max(smax, cfg.coeffs.sigma(t, x).norm());
    }
  }
  double gmax = 0.0;
  for (const Vec& x : cfg.domain.sample_boundary(256)) gmax = std::max(gmax, cfg.field(x).norm());
  double c0 = cfg.field.c0() > 0 ? cfg.field.c0() : validate_oblique(cfg.domain, cfg.field, 1024).min_dot;
  double k_sk = 2 * (1 + gmax / c0);
  rep.envelope = k_sk * (bmax * std::sqrt(cfg.T - cfg.t0) + smax * std::sqrt(2 * rep.level));

  rep.n_controls = cfg.goodness_controls;
  for (int k = 0; k < cfg.goodness_controls; ++k) {
    Control c = Control::zero(cgrid, m);
    double raw = 0.0;
    for (int j = 0; j < segments; ++j) {
      auto z = normal_pair(cfg.seed, static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(j), 7);
      for (int i = 0; i < m; ++i) c.values[j](i) = z[i];
      raw += 0.5 * c.values[j].squaredNorm() * cgrid.dt(j);
    }
    double target = rep.level * radical_inverse(static_cast<unsigned long>(k) + 1, 2);
    double scale = raw > 0 ? std::sqrt(target / raw) : 0.0;
    for (auto& v : c.values) v *= scale;
    rep.max_action = std::max(rep.max_action, c.action());
    ReflectedPath p = solve_reflected_ode(cfg.domain, cfg.field, cfg.coeffs, c, cfg.t0, cfg.x0, pgrid);
    rep.max_holder = std::max(rep.max_holder, holder_half_quotient(p));
    rep.max_distance_from_free = std::max(rep.max_distance_from_free, sup_distance(p, free));
  }
  rep.pass = rep.max_holder <= rep.envelope * (1 + 1e-12) + 1e-12 && rep.weak.eventually_decreasing;
  return rep;
}

}  // namespace rldp
