#include "rldp_cli/config.hpp"

#include <fstream>
#include <sstream>

namespace rldp::cli {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& msg) {
  throw ConfigError("config field '" + path + "': " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json* find(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) field_error(path, "expected a number");
  return j.get<double>();
}

double number(const json& j, const std::string& key, const std::string& path, double dflt) {
  const json* v = find(j, key);
  return v ? number(*v, join(path, key)) : dflt;
}

double require_number(const json& j, const std::string& key, const std::string& path) {
  const json* v = find(j, key);
  if (!v) field_error(join(path, key), "missing");
  return number(*v, join(path, key));
}

long integer(const json& j, const std::string& key, const std::string& path, long dflt) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (!v->is_number_integer()) field_error(join(path, key), "expected an integer");
  return v->get<long>();
}

bool boolean(const json& j, const std::string& key, const std::string& path, bool dflt) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (!v->is_boolean()) field_error(join(path, key), "expected true or false");
  return v->get<bool>();
}

std::string string(const json& j, const std::string& key, const std::string& path, const std::string& dflt) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (!v->is_string()) field_error(join(path, key), "expected a string");
  return v->get<std::string>();
}

const json& object(const json& j, const std::string& key, const std::string& path) {
  const json* v = find(j, key);
  if (!v) field_error(join(path, key), "missing");
  if (!v->is_object()) field_error(join(path, key), "expected an object");
  return *v;
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) field_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Vec vector(const json& j, const std::string& path, int dim) {
  auto v = numbers(j, path);
  if (static_cast<int>(v.size()) != dim) field_error(path, "expected " + std::to_string(dim) + " components");
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out(i) = v[i];
  return out;
}

Vec require_vector(const json& j, const std::string& key, const std::string& path, int dim) {
  const json* v = find(j, key);
  if (!v) field_error(join(path, key), "missing");
  return vector(*v, join(path, key), dim);
}

Mat matrix(const json& j, const std::string& path, int rows, int cols) {
  if (j.is_number() && rows == 1 && cols == 1) {
    Mat m(1, 1);
    m(0, 0) = j.get<double>();
    return m;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    field_error(path, "expected " + std::to_string(rows) + " rows");
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    Vec row = vector(j[r], path + "[" + std::to_string(r) + "]", cols);
    for (int c = 0; c < cols; ++c) m(r, c) = row(c);
  }
  return m;
}

Domain parse_domain(const json& j, const std::string& path) {
  std::string kind = string(j, "kind", path, "");
  if (kind == "interval") {
    double lo = require_number(j, "lo", path), hi = require_number(j, "hi", path);
    if (!(hi > lo)) field_error(join(path, "hi"), "must exceed lo");
    return Domain::interval(lo, hi);
  }
  if (kind == "disk") {
    double r = require_number(j, "radius", path);
    if (!(r > 0)) field_error(join(path, "radius"), "must be positive");
    const json* c = find(j, "center");
    return Domain::disk(c ? vector(*c, join(path, "center"), 2) : vec2(0, 0), r);
  }
  if (kind == "ellipse" || kind == "superellipse") {
    double a = require_number(j, "a", path), b = require_number(j, "b", path);
    if (!(a > 0) || !(b > 0)) field_error(path, "semi-axes must be positive");
    const json* c = find(j, "center");
    Vec center = c ? vector(*c, join(path, "center"), 2) : vec2(0, 0);
    if (kind == "ellipse") return Domain::ellipse(center, a, b);
    double p = require_number(j, "p", path);
    if (!(p >= 2)) field_error(join(path, "p"), "must be at least 2");
    return Domain::superellipse(center, a, b, p);
  }
  if (kind.empty()) field_error(join(path, "kind"), "missing");
  field_error(join(path, "kind"), "unknown domain kind '" + kind + "' (interval, disk, ellipse, superellipse)");
}

ObliqueField parse_field(const json* j, const std::string& path, const Domain& dom) {
  if (!j) return ObliqueField::normal(dom);
  std::string kind = string(*j, "kind", path, "normal");
  if (kind == "normal") return ObliqueField::normal(dom);
  if (kind == "normal_plus_tangent") {
    if (dom.dim() != 2) field_error(join(path, "kind"), "normal_plus_tangent needs a 2D domain");
    return ObliqueField::normal_plus_tangent(dom, require_number(*j, "kappa", path));
  }
  if (kind == "constant") return ObliqueField::constant(require_vector(*j, "value", path, dom.dim()));
  field_error(join(path, "kind"), "unknown oblique field '" + kind + "' (normal, normal_plus_tangent, constant)");
}

CoefficientField parse_coeffs(const json& j, const std::string& path, int d) {
  std::string kind = string(j, "kind", path, "constant");
  int m = static_cast<int>(integer(j, "m", path, d));
  if (m < 1 || m > 2) field_error(join(path, "m"), "noise dimension must be 1 or 2");
  const json* s = find(j, "sigma");
  Mat sigma = s ? matrix(*s, join(path, "sigma"), d, m) : Mat::Identity(d, m);
  std::optional<CoefficientField> c;
  if (kind == "constant") {
    const json* b = find(j, "b");
    c.emplace(CoefficientField::constant(b ? vector(*b, join(path, "b"), d) : Vec::Zero(d), sigma));
  } else if (kind == "linear") {
    const json* B = find(j, "B");
    const json* b0 = find(j, "b0");
    if (!B) field_error(join(path, "B"), "missing");
    c.emplace(CoefficientField::linear(matrix(*B, join(path, "B"), d, d),
                                       b0 ? vector(*b0, join(path, "b0"), d) : Vec::Zero(d), sigma));
  } else if (kind == "rotational") {
    if (d != 2) field_error(join(path, "kind"), "rotational needs a 2D domain");
    const json* ctr = find(j, "center");
    c.emplace(CoefficientField::rotational(require_number(j, "omega", path),
                                           ctr ? vector(*ctr, join(path, "center"), 2) : vec2(0, 0), sigma));
  } else {
    field_error(join(path, "kind"), "unknown coefficient field '" + kind + "' (constant, linear, rotational)");
  }
  if (const json* e = find(j, "eps_family")) {
    std::string p = join(path, "eps_family");
    EpsPerturbation pert;
    const json* shift = find(*e, "drift_shift");
    pert.drift_shift = shift ? vector(*shift, join(p, "drift_shift"), d) : Vec::Zero(d);
    pert.sigma_scale = number(*e, "sigma_scale", p, 0.0);
    return c->with_eps_family(pert);
  }
  return *c;
}

ReferencePath parse_reference(const json& j, const std::string& path, int d, double t0, double T) {
  std::string kind = string(j, "kind", path, "constant");
  if (kind == "constant") return ReferencePath::constant(require_vector(j, "point", path, d), t0, T);
  if (kind == "linear")
    return ReferencePath::linear(require_vector(j, "x0", path, d), require_vector(j, "velocity", path, d), t0, T,
                                 static_cast<int>(integer(j, "nodes", path, 64)));
  if (kind == "points") {
    const json* pts = find(j, "points");
    if (!pts || !pts->is_array() || pts->size() < 2) field_error(join(path, "points"), "need at least two points");
    std::vector<Vec> v;
    for (size_t i = 0; i < pts->size(); ++i)
      v.push_back(vector((*pts)[i], join(path, "points") + "[" + std::to_string(i) + "]", d));
    return ReferencePath(TimeGrid::uniform(t0, T, static_cast<int>(v.size()) - 1), v);
  }
  field_error(join(path, "kind"), "unknown reference kind '" + kind + "' (constant, linear, points)");
}

double positive(const json& j, const std::string& key, const std::string& path, double dflt) {
  double v = number(j, key, path, dflt);
  if (!(v > 0)) field_error(join(path, key), "must be positive");
  return v;
}

std::pair<int, int> line_col(const std::string& text, size_t byte) {
  int line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    std::ostringstream os;
    os << "config parse error at line " << line << ", column " << col << ": " << e.what();
    throw ConfigError(os.str());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");

  Domain dom = parse_domain(object(root, "domain", ""), "domain");
  const int d = dom.dim();
  ObliqueField field = parse_field(find(root, "oblique"), "oblique", dom);
  CoefficientField coeffs = parse_coeffs(object(root, "coefficients", ""), "coefficients", d);
  const json* x0 = find(root, "x0");
  Vec x = x0 ? vector(*x0, "x0", d) : dom.center();

  ExperimentConfig exp(dom, field, coeffs, x);
  exp.t0 = number(root, "t0", "", 0.0);
  exp.T = number(root, "T", "", 1.0);
  if (!(exp.T > exp.t0)) field_error("T", "must exceed t0");

  if (const json* ev = find(root, "events")) {
    if (const json* b = find(*ev, "ball")) {
      std::string p = "events.ball";
      ReferencePath g = parse_reference(object(*b, "reference", p), join(p, "reference"), d, exp.t0, exp.T);
      exp.ball = EventSpec::ball(g, positive(*b, "radius", p, 1.0), string(*b, "id", p, "ball"));
    }
    if (const json* c = find(*ev, "complements")) {
      std::string p = "events.complements";
      const json* tubes = find(*c, "tubes");
      if (!tubes || !tubes->is_array() || tubes->empty()) field_error(join(p, "tubes"), "need at least one tube");
      std::vector<ReferencePath> refs;
      std::vector<double> radii;
      for (size_t i = 0; i < tubes->size(); ++i) {
        std::string tp = join(p, "tubes") + "[" + std::to_string(i) + "]";
        refs.push_back(parse_reference(object((*tubes)[i], "reference", tp), join(tp, "reference"), d, exp.t0, exp.T));
        radii.push_back(positive((*tubes)[i], "radius", tp, 1.0));
      }
      exp.complements = EventSpec::complements(refs, radii, string(*c, "id", p, "complement"));
    }
  }

  if (const json* l = find(root, "eps_ladder")) {
    exp.eps_ladder = numbers(*l, "eps_ladder");
    if (exp.eps_ladder.empty()) field_error("eps_ladder", "must not be empty");
    for (size_t i = 0; i < exp.eps_ladder.size(); ++i) {
      if (!(exp.eps_ladder[i] > 0)) field_error("eps_ladder", "entries must be positive");
      if (i > 0 && !(exp.eps_ladder[i] < exp.eps_ladder[i - 1])) field_error("eps_ladder", "must be strictly decreasing");
    }
  }
  exp.seed = static_cast<std::uint64_t>(integer(root, "seed", "", 1));
  exp.threads = static_cast<int>(integer(root, "threads", "", 0));

  if (const json* mc = find(root, "mc")) {
    exp.n_samples = integer(*mc, "n_samples", "mc", exp.n_samples);
    exp.n_steps = static_cast<int>(integer(*mc, "n_steps", "mc", exp.n_steps));
    if (exp.n_samples < 100) field_error("mc.n_samples", "at least 100 required");
    if (exp.n_steps < 1) field_error("mc.n_steps", "must be positive");
  }
  if (const json* r = find(root, "rate")) {
    exp.rate_tol = positive(*r, "tol", "rate", exp.rate_tol);
    exp.rate_opts.segments = static_cast<int>(integer(*r, "segments", "rate", exp.rate_opts.segments));
    exp.rate_opts.max_segments = static_cast<int>(integer(*r, "max_segments", "rate", exp.rate_opts.max_segments));
    exp.rate_opts.refine = boolean(*r, "refine", "rate", exp.rate_opts.refine);
    exp.rate_opts.substeps = static_cast<int>(integer(*r, "substeps", "rate", exp.rate_opts.substeps));
    exp.rate_opts.max_iterations = static_cast<int>(integer(*r, "max_iterations", "rate", exp.rate_opts.max_iterations));
    if (exp.rate_opts.segments < 1) field_error("rate.segments", "must be positive");
  }
  if (const json* h = find(root, "hjb")) {
    exp.grid.cells = static_cast<int>(integer(*h, "cells", "hjb", 0));
    exp.grid.cfl_fraction = positive(*h, "cfl_fraction", "hjb", exp.grid.cfl_fraction);
    if (exp.grid.cfl_fraction > 1) field_error("hjb.cfl_fraction", "must not exceed 1");
    exp.grid.dt = number(*h, "dt", "hjb", 0.0);
    exp.scheme_refine = boolean(*h, "refine", "hjb", exp.scheme_refine);
    if (exp.grid.cells < 0) field_error("hjb.cells", "must be nonnegative");
  }
  if (const json* l = find(root, "ldp")) {
    exp.cap = number(*l, "cap", "ldp", 0.0);
    exp.rel_slack = number(*l, "rel_slack", "ldp", exp.rel_slack);
    if (exp.rel_slack < 0) field_error("ldp.rel_slack", "must be nonnegative");
    exp.finite_eps_term = boolean(*l, "finite_eps_term", "ldp", exp.finite_eps_term);
    exp.richardson = boolean(*l, "richardson", "ldp", exp.richardson);
  }
  if (const json* s = find(root, "stopping")) {
    exp.dp_steps = static_cast<int>(integer(*s, "steps", "stopping", exp.dp_steps));
    exp.dp_substeps = static_cast<int>(integer(*s, "substeps", "stopping", exp.dp_substeps));
    if (const json* m = find(*s, "magnitudes")) exp.dp_magnitudes = numbers(*m, "stopping.magnitudes");
    if (exp.dp_steps < 1) field_error("stopping.steps", "must be positive");
  }
  if (const json* g = find(root, "goodness")) {
    exp.goodness_level = number(*g, "level", "goodness", exp.goodness_level);
    exp.goodness_controls = static_cast<int>(integer(*g, "controls", "goodness", exp.goodness_controls));
    exp.weak_amplitude = number(*g, "amplitude", "goodness", exp.weak_amplitude);
    exp.weak_n_max = static_cast<int>(integer(*g, "n_max", "goodness", exp.weak_n_max));
    if (exp.weak_n_max < 4) field_error("goodness.n_max", "must be at least 4");
  }

  RunConfig cfg(std::move(exp));
  cfg.source = text;
  cfg.output_dir = string(root, "output_dir", "", cfg.output_dir);
  if (const json* l = find(root, "ldp")) {
    cfg.cap_check = boolean(*l, "cap_check", "ldp", cfg.cap_check);
    if (const json* c = find(*l, "cap_levels")) cfg.cap_levels = numbers(*c, "ldp.cap_levels");
    cfg.cap_tolerance = positive(*l, "cap_tolerance", "ldp", cfg.cap_tolerance);
    cfg.goodness = boolean(*l, "goodness", "ldp", cfg.goodness);
  }
  cfg.simulate.eps = cfg.exp.eps_ladder.front();
  if (const json* s = find(root, "simulate")) {
    cfg.simulate.eps = number(*s, "eps", "simulate", cfg.simulate.eps);
    if (cfg.simulate.eps < 0) field_error("simulate.eps", "must be nonnegative");
    cfg.simulate.n_steps = static_cast<int>(integer(*s, "n_steps", "simulate", cfg.simulate.n_steps));
    cfg.simulate.trajectory = static_cast<std::uint64_t>(integer(*s, "trajectory", "simulate", 0));
  }
  if (const json* t = find(root, "testfn")) {
    cfg.testfn.eps = positive(*t, "eps", "testfn", cfg.testfn.eps);
    cfg.testfn.rho = positive(*t, "rho", "testfn", cfg.testfn.rho);
    if (cfg.testfn.eps > 1) field_error("testfn.eps", "must lie in (0,1]");
    if (cfg.testfn.rho > 1) field_error("testfn.rho", "must lie in (0,1]");
    cfg.testfn.n_samples = static_cast<int>(integer(*t, "n_samples", "testfn", cfg.testfn.n_samples));
    if (find(*t, "force_B")) cfg.testfn.force_B = number(*t, "force_B", "testfn", 0.0);
    if (find(*t, "force_C")) cfg.testfn.force_C = number(*t, "force_C", "testfn", 0.0);
  }
  if (const json* r = find(root, "rate"))
    if (const json* p = find(*r, "path")) cfg.rate_path = parse_reference(*p, "rate.path", d, cfg.exp.t0, cfg.exp.T);

  if (!cfg.exp.domain.contains(cfg.exp.x0, 1e-12)) field_error("x0", "must lie in the closed domain");
  try {
    if (cfg.exp.ball) cfg.exp.ball->validate(cfg.exp.domain);
    if (cfg.exp.complements) cfg.exp.complements->validate(cfg.exp.domain);
  } catch (const Error& e) {
    field_error("events", e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace rldp::cli
