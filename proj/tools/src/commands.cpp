#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "rldp/version.hpp"
#include "rldp_cli/cli.hpp"
#include "rldp_cli/config.hpp"
#include "rldp_cli/json_io.hpp"

namespace rldp::cli {

namespace fs = std::filesystem;

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"simulate", "estimate", "rate", "stopping", "hjb", "testfn-check",
                                              "verify-ldp"};
  return names;
}

namespace {

class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void text(const std::string& name, const std::string& body) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir_ / name).string());
    f << body;
    record(name, body);
  }
  void json(const std::string& name, const ojson& j) { text(name, j.dump(2) + "\n"); }
  void binary_file(const std::string& name) {
    std::ifstream f(dir_ / name, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    record(name, ss.str());
  }
  fs::path path(const std::string& name) const { return dir_ / name; }

  void manifest(const RunConfig& cfg, const std::string& sub, const std::string& config_path) {
    ojson m;
    m["tool"] = "rldp";
    m["subcommand"] = sub;
    m["config_path"] = config_path;
    m["config_hash"] = hex64(fnv1a64(cfg.source));
    m["seed"] = cfg.exp.seed;
    m["threads"] = cfg.exp.threads;
    ojson v;
    for (const auto& [k, ver] : library_versions()) v[k] = ver;
    v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                         std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    m["versions"] = v;
    m["outputs"] = files_;
    m["content_hash"] = hex64(fnv1a64(m.dump()));
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ts;
    ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    m["timestamp"] = ts.str();
    std::ofstream f(dir_ / "manifest.json", std::ios::binary);
    f << m.dump(2) << "\n";
  }

 private:
  void record(const std::string& name, const std::string& body) {
    files_.push_back(ojson{{"file", name}, {"bytes", body.size()}, {"fnv1a", hex64(fnv1a64(body))}});
  }
  fs::path dir_;
  ojson files_ = ojson::array();
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string control_csv(const Control& c) {
  std::ostringstream os;
  os.precision(17);
  os << "t_start,t_end";
  int m = c.values.empty() ? 0 : static_cast<int>(c.values[0].size());
  for (int i = 0; i < m; ++i) os << ",alpha" << i + 1;
  os << "\n";
  for (int k = 0; k < c.grid.n_steps(); ++k) {
    os << c.grid[k] << ',' << c.grid[k + 1];
    for (int i = 0; i < m; ++i) os << ',' << c.values[k](i);
    os << "\n";
  }
  return os.str();
}

std::vector<const EventSpec*> events_of(const ExperimentConfig& e) {
  std::vector<const EventSpec*> out;
  if (e.ball) out.push_back(&*e.ball);
  if (e.complements) out.push_back(&*e.complements);
  return out;
}

double default_cap(const ExperimentConfig& e) { return e.cap > 0 ? e.cap : 1.0; }

int cmd_simulate(const RunConfig& cfg, Outputs& out, std::ostream& log) {
  const auto& e = cfg.exp;
  TimeGrid grid = TimeGrid::uniform(e.t0, e.T, cfg.simulate.n_steps);
  ReflectedPath p = simulate_reflected_sde(e.domain, e.field, e.coeffs, NoiseScale(cfg.simulate.eps), e.t0, e.x0, grid,
                                           e.seed, cfg.simulate.trajectory);
  std::ostringstream csv;
  write_path_csv(csv, p);
  out.text("path.csv", csv.str());
  PathCheck chk = check_path(e.domain, e.field, p);
  ojson j{{"eps", num(cfg.simulate.eps)},
          {"seed", e.seed},
          {"trajectory", cfg.simulate.trajectory},
          {"n_steps", cfg.simulate.n_steps},
          {"total_variation", num(p.total_variation)},
          {"min_signed_distance", num(chk.min_signed_distance)},
          {"interior_variation", num(chk.interior_variation)},
          {"max_angle", num(chk.max_angle)}};
  ojson hits = ojson::object();
  for (const EventSpec* ev : events_of(e)) hits[ev->id] = event_hit(p, *ev);
  j["event_hits"] = hits;
  out.json("simulate.json", j);
  log << "simulate: " << p.points.size() << " nodes written to path.csv\n";
  return kOk;
}

int cmd_estimate(const RunConfig& cfg, Outputs& out, std::ostream& log) {
  const auto& e = cfg.exp;
  auto evs = events_of(e);
  if (evs.empty()) throw ConfigError("config field 'events': estimate needs at least one event");
  TimeGrid grid = TimeGrid::uniform(e.t0, e.T, e.n_steps);
  ojson arr = ojson::array();
  bool zero = false;
  for (const EventSpec* ev : evs)
    for (double eps : e.eps_ladder) {
      McEstimate est = estimate_event_probability(e.domain, e.field, e.coeffs, NoiseScale(eps), e.t0, e.x0, grid, *ev,
                                                  e.n_samples, e.seed, e.threads);
      ojson row{{"event_id", ev->id}, {"eps", num(eps)}, {"p_hat", num(est.p_hat)}, {"ci", num(est.ci_half_width)},
                {"n", est.n_samples}, {"n_hits", est.n_hits}, {"zero_hits", est.zero_hits}};
      if (!est.zero_hits) row["log_rate"] = to_json(log_rate_estimate(est, NoiseScale(eps)));
      zero = zero || est.zero_hits;
      arr.push_back(row);
      log << "estimate: " << ev->id << " eps=" << eps << " p_hat=" << est.p_hat << "\n";
    }
  out.json("estimate.json", ojson{{"estimates", arr}});
  return zero ? kInconclusive : kOk;
}

int cmd_rate(const RunConfig& cfg, Outputs& out, std::ostream& log) {
  const auto& e = cfg.exp;
  ojson j = ojson::object();
  for (const EventSpec* ev : events_of(e)) {
    RateResult r = rate_of_event(e.domain, e.field, e.coeffs, e.t0, e.x0, *ev, e.T, e.rate_tol, e.rate_opts);
    ojson rj = to_json(r);
    if (r.feasible) {
      out.text("rate_" + ev->id + "_control.csv", control_csv(r.optimizer));
      rj["control_csv"] = "rate_" + ev->id + "_control.csv";
    }
    j[ev->id] = rj;
    log << "rate: " << ev->id << " Lambda=" << r.value << "\n";
  }
  if (cfg.rate_path) {
    RateResult r = rate_of_path(e.domain, e.field, e.coeffs, e.t0, e.x0, *cfg.rate_path, e.T, e.rate_tol, e.rate_opts);
    ojson rj = to_json(r);
    if (r.feasible) {
      out.text("rate_path_control.csv", control_csv(r.optimizer));
      rj["control_csv"] = "rate_path_control.csv";
    }
    j["path"] = rj;
    log << "rate: path lambda=" << r.value << "\n";
  }
  if (j.empty()) throw ConfigError("config field 'events': rate needs an event or rate.path");
  out.json("rate.json", j);
  return kOk;
}

std::string subset_name(unsigned J, int N) {
  std::string s = "{";
  bool first = true;
  for (int i = 0; i < N; ++i)
    if (J & (1u << i)) {
      if (!first) s += ",";
      s += std::to_string(i);
      first = false;
    }
  return s + "}";
}

int cmd_stopping(const RunConfig& cfg, Outputs& out, std::ostream& log) {
  const auto& e = cfg.exp;
  DiscreteProblem p;
  p.grid = TimeGrid::uniform(e.t0, e.T, e.dp_steps);
  auto mags = e.dp_magnitudes.empty() ? default_dp_magnitudes(e) : e.dp_magnitudes;
  p.control_set = default_control_set(e.coeffs.m(), mags);
  p.state_rule = make_reflected_state_rule(e.domain, e.field, e.coeffs, p.grid, e.dp_substeps);
  const double A = default_cap(e);
  ojson j{{"cap", num(A)}, {"steps", e.dp_steps}, {"controls", p.control_set.size()}};
  if (e.ball) {
    DiscreteProblem q = p;
    q.obstacles = {tube_indicator(*e.ball, 0, A, true)};
    double v = value_inf_sup(q, 0, e.x0);
    j["ball"] = ojson{{"event_id", e.ball->id}, {"value_inf_sup", num(v)}};
    log << "stopping: inf-sup value " << v << "\n";
  }
  if (e.complements) {
    const int N = static_cast<int>(e.complements->references.size());
    DiscreteProblem q = p;
    for (int i = 0; i < N; ++i) q.obstacles.push_back(tube_indicator(*e.complements, i, A, false));
    ojson subsets = ojson::object();
    for (const auto& [J, v] : reduced_values_by_subset(q, 0, e.x0)) subsets[subset_name(J, N)] = num(v);
    ojson cj{{"event_id", e.complements->id}, {"reduced_values", subsets}};
    if (N <= 3) {
      try {
        cj["multi_stop_value"] = num(multi_stop_value(q, 0, e.x0));
      } catch (const StateSpaceTooLarge& ex) {
        cj["multi_stop_value"] = nullptr;
        cj["multi_stop_note"] = ex.what();
      }
    }
    j["complements"] = cj;
    log << "stopping: reduced values for " << N << " tubes\n";
  }
  if (!e.ball && !e.complements) throw ConfigError("config field 'events': stopping needs an event");
  out.json("stopping.json", j);
  return kOk;
}

ojson grid_summary(const ValueGrid& g, const Vec& x0) {
  return ojson{{"value_at_x0", num(g.value_t0(x0))}, {"h", num(g.h)},          {"dt", num(g.dt)},
               {"cfl_bound", num(g.cfl_bound)},      {"time_steps", g.time_steps}, {"active_nodes", g.n_active()},
               {"complementarity", to_json(g.complementarity)}};
}

int cmd_hjb(const RunConfig& cfg, Outputs& out, std::ostream& log) {
  const auto& e = cfg.exp;
  GridParams gp = e.grid;
  gp.t0 = e.t0;
  gp.T = e.T;
  double h = grid_cell_size(e.domain, gp);
  double A = default_cap(e);
  const double T = e.T;
  const double eps = e.eps_ladder.back();
  ojson j{{"cap", num(A)}};
  auto emit = [&](const std::string& tag, const ValueGrid& g) {
    std::ostringstream csv;
    g.write_csv(csv);
    out.text("hjb_" + tag + ".csv", csv.str());
    g.write_binary(out.path("hjb_" + tag + ".bin").string());
    out.binary_file("hjb_" + tag + ".bin");
    j[tag] = grid_summary(g, e.x0);
  };
  if (e.ball) {
    Obstacle obs = tube_obstacle(*e.ball, 0, A, true, h);
    auto term = [&obs, T](const Vec& x) { return obs(T, x); };
    emit("ball_limit", solve_limit_vi(e.domain, e.field, e.coeffs, obs, ViType::min_type, term, gp));
    emit("ball_eps", solve_eps_vi(e.domain, e.field, e.coeffs, obs, NoiseScale(eps), ViType::min_type, term, gp));
    j["ball_eps"]["eps"] = num(eps);
  }
  if (e.complements && e.complements->references.size() == 1) {
    Obstacle obs = tube_obstacle(*e.complements, 0, A, false, h);
    auto term = [&obs, T](const Vec& x) { return obs(T, x); };
    emit("complement_limit", solve_limit_vi(e.domain, e.field, e.coeffs, obs, ViType::max_type, term, gp));
  }
  if (!j.contains("ball_limit") && !j.contains("complement_limit"))
    throw ConfigError("config field 'events': hjb needs a ball or a single-tube complement event");
  out.json("hjb.json", j);
  log << "hjb: lattice values written\n";
  return kOk;
}

int cmd_testfn(const RunConfig& cfg, Outputs& out, std::ostream& log) {
  const auto& e = cfg.exp;
  const auto& s = cfg.testfn;
  TestFunction tf = build_testfn(e.domain, e.field, s.eps, s.rho);
  if (s.force_B || s.force_C)
    tf = TestFunction(e.domain, e.field, s.eps, s.rho, tf.A(), s.force_B.value_or(tf.B()), s.force_C.value_or(tf.C()));
  TestFnReport r = check_testfn_properties(tf, s.n_samples);
  TestFnReport r2 = check_testfn_properties(tf, 2 * s.n_samples);
  double K = std::max(r.K_psi_i, r.K_psi_ii), K2 = std::max(r2.K_psi_i, r2.K_psi_ii);
  ojson j{{"eps", num(s.eps)},
          {"rho", num(s.rho)},
          {"A", num(tf.A())},
          {"B", num(tf.B())},
          {"C", num(tf.C())},
          {"K", num(K)},
          {"report", to_json(r)},
          {"report_doubled", to_json(r2)},
          {"K_relative_change", num(K > 0 ? std::abs(K2 - K) / K : 0.0)},
          {"psi_iii_holds", r.min_psi_iii > 0 && r2.min_psi_iii > 0}};
  out.json("testfn.json", j);
  log << "testfn-check: K=" << K << " min_psi_iii=" << r.min_psi_iii << "\n";
  return kOk;
}

int cmd_verify(const RunConfig& cfg, Outputs& out, std::ostream& log) {
  const auto& e = cfg.exp;
  if (!e.ball && !e.complements) throw ConfigError("config field 'events': verify-ldp needs an event");
  ojson j;
  ojson exps = ojson::array();
  std::vector<LdpReport> reps;
  if (e.ball) reps.push_back(run_upper_bound_experiment(e));
  if (e.complements) reps.push_back(run_lower_bound_experiment(e));
  bool inconclusive = false, inconsistent = false;
  std::ostringstream csv;
  csv.precision(17);
  csv << "experiment,eps,log_rate,ci_lo,ci_hi,lambda,dp_value\n";
  for (const auto& r : reps) {
    exps.push_back(to_json(r));
    inconclusive = inconclusive || r.verdict == Verdict::inconclusive;
    inconsistent = inconsistent || r.verdict == Verdict::inconsistent;
    for (const auto& l : r.ladder) {
      csv << r.experiment << ',' << l.eps << ',';
      if (l.finite)
        csv << l.log_rate.value << ',' << l.log_rate.lo << ',' << l.log_rate.hi;
      else
        csv << "inf,inf,inf";
      csv << ',' << fmt(r.lambda_value) << ',' << fmt(r.dp_value) << "\n";
    }
    log << "verify-ldp: " << r.experiment << " L(eps_min)=" << r.smallest_eps_rate << " Lambda=" << r.lambda_value
        << " slack=" << r.slack.total() << " -> " << to_string(r.verdict) << "\n";
  }
  j["experiments"] = exps;
  if (cfg.cap_check && e.ball) {
    CapReport c = cap_identity_check(e, cfg.cap_levels, cfg.cap_tolerance);
    j["cap_identity"] = to_json(c);
    inconsistent = inconsistent || !c.pass;
    log << "verify-ldp: cap identity " << (c.pass ? "pass" : "fail") << "\n";
  }
  if (cfg.goodness) {
    GoodnessReport g = goodness_proxy(e);
    j["goodness"] = to_json(g);
    inconsistent = inconsistent || !g.pass;
    log << "verify-ldp: goodness proxy " << (g.pass ? "pass" : "fail") << "\n";
  }
  Verdict v = inconclusive ? Verdict::inconclusive : (inconsistent ? Verdict::inconsistent : Verdict::consistent);
  j["verdict"] = to_string(v);
  out.json("report.json", j);
  out.text("ldp_ladder.csv", csv.str());
  return v == Verdict::consistent ? kOk : (v == Verdict::inconclusive ? kInconclusive : kInconsistent);
}

}  // namespace

int run(const std::string& sub, const Options& opts, std::ostream& log, std::ostream& err) {
  try {
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), sub) == names.end()) throw ConfigError("unknown subcommand '" + sub + "'");
    RunConfig cfg = load_config(opts.config);
    if (opts.seed) cfg.exp.seed = *opts.seed;
    if (opts.threads) cfg.exp.threads = *opts.threads;
    Outputs out(opts.out ? fs::path(*opts.out) : fs::path(cfg.output_dir));
    int code;
    if (sub == "simulate")
      code = cmd_simulate(cfg, out, log);
    else if (sub == "estimate")
      code = cmd_estimate(cfg, out, log);
    else if (sub == "rate")
      code = cmd_rate(cfg, out, log);
    else if (sub == "stopping")
      code = cmd_stopping(cfg, out, log);
    else if (sub == "hjb")
      code = cmd_hjb(cfg, out, log);
    else if (sub == "testfn-check")
      code = cmd_testfn(cfg, out, log);
    else
      code = cmd_verify(cfg, out, log);
    out.manifest(cfg, sub, opts.config);
    return code;
  } catch (const std::exception& e) {
    err << "rldp " << sub << ": " << e.what() << "\n";
    return kError;
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Reflected small-noise diffusion large deviations toolkit"};
  app.require_subcommand(1);
  Options opts;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  static const std::map<std::string, std::string> about{
      {"simulate", "one reflected path at simulate.eps"},
      {"estimate", "Monte Carlo event probabilities over the eps ladder"},
      {"rate", "rate-function minimization for the configured events"},
      {"stopping", "control/stopping game values on a time grid"},
      {"hjb", "limit and finite-eps variational inequalities on a grid"},
      {"testfn-check", "test-function properties on sampled pairs"},
      {"verify-ldp", "end-to-end bound checks with itemized slack"}};
  std::vector<CLI::App*> subs;
  for (const auto& name : subcommands()) {
    CLI::App* s = app.add_subcommand(name, about.at(name));
    s->add_option("--config", opts.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    s->add_option("--out", out, "output directory (overrides output_dir)");
    s->add_option("--seed", seed, "seed override");
    s->add_option("--threads", threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kError;
  }
  for (CLI::App* s : subs) {
    if (!s->parsed()) continue;
    if (s->count("--out")) opts.out = out;
    if (s->count("--seed")) opts.seed = seed;
    if (s->count("--threads")) opts.threads = threads;
    return run(s->get_name(), opts, std::cerr, std::cerr);
  }
  return kError;
}

}  // namespace rldp::cli
