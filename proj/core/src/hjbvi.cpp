#include "rldp/hjbvi.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace rldp {

namespace {

enum class Mode { nonlinear_min, nonlinear_max, linear_inf, linear_sup };

const double kNaN = std::numeric_limits<double>::quiet_NaN();

int default_cells(const Domain& dom, const GridParams& gp) {
  if (gp.cells > 0) return gp.cells;
  return dom.dim() == 1 ? 200 : 80;
}

// Interpolation weights over the active corners of the cell containing z.
bool corner_weights(const ValueGrid& vg, const Vec& z, std::vector<int>& idx, std::vector<double>& w) {
  idx.clear();
  w.clear();
  double fx = (z(0) - vg.lo[0]) / vg.h;
  int i0 = static_cast<int>(std::floor(fx));
  double wx = fx - i0;
  if (vg.dim == 1) {
    for (int di = 0; di < 2; ++di) {
      int i = i0 + di;
      if (i < 0 || i >= vg.nx) continue;
      double ww = di ? wx : 1 - wx;
      int id = vg.index(i);
      if (vg.active[id] && ww > 0) {
        idx.push_back(id);
        w.push_back(ww);
      }
    }
  } else {
    double fy = (z(1) - vg.lo[1]) / vg.h;
    int j0 = static_cast<int>(std::floor(fy));
    double wy = fy - j0;
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) {
        int i = i0 + di, j = j0 + dj;
        if (i < 0 || i >= vg.nx || j < 0 || j >= vg.ny) continue;
        double ww = (di ? wx : 1 - wx) * (dj ? wy : 1 - wy);
        int id = vg.index(i, j);
        if (vg.active[id] && ww > 0) {
          idx.push_back(id);
          w.push_back(ww);
        }
      }
  }
  double tot = 0.0;
  for (double x : w) tot += x;
  if (tot < 1e-12) return false;
  for (double& x : w) x /= tot;
  return true;
}

ValueGrid build_lattice(const Domain& dom, const ObliqueField& field, int cells) {
  ValueGrid vg;
  vg.dim = dom.dim();
  if (vg.dim == 1) {
    double a = dom.center()(0) - dom.param_a(), b = dom.center()(0) + dom.param_a();
    if (dom.kind() != DomainKind::interval) {
      a = dom.box_lo()(0);
      b = dom.box_hi()(0);
    }
    vg.h = (b - a) / cells;
    vg.lo[0] = a - vg.h;
    vg.nx = cells + 3;
    vg.ny = 1;
  } else {
    Vec lo = dom.box_lo(), hi = dom.box_hi();
    double ext = std::max(hi(0) - lo(0), hi(1) - lo(1));
    vg.h = ext / cells;
    vg.nx = static_cast<int>(std::ceil((hi(0) - lo(0)) / vg.h - 1e-9)) + 3;
    vg.ny = static_cast<int>(std::ceil((hi(1) - lo(1)) / vg.h - 1e-9)) + 3;
    vg.lo[0] = lo(0) - vg.h;
    vg.lo[1] = lo(1) - vg.h;
  }
  const int N = vg.nx * vg.ny;
  vg.active.assign(N, 0);
  const double tol = 1e-12 * (1 + vg.h * vg.nx);
  for (int id = 0; id < N; ++id) vg.active[id] = dom.signed_distance(vg.coord(id)) >= -tol;
  // ghosts: inactive nodes touching the active set (3x3 neighbourhood)
  std::vector<int> idx;
  std::vector<double> w;
  for (int j = 0; j < vg.ny; ++j)
    for (int i = 0; i < vg.nx; ++i) {
      int id = vg.index(i, j);
      if (vg.active[id]) continue;
      bool touch = false;
      for (int dj = (vg.dim == 2 ? -1 : 0); dj <= (vg.dim == 2 ? 1 : 0) && !touch; ++dj)
        for (int di = -1; di <= 1 && !touch; ++di) {
          int ii = i + di, jj = j + dj;
          if (ii < 0 || ii >= vg.nx || jj < 0 || jj >= vg.ny) continue;
          touch = vg.active[vg.index(ii, jj)];
        }
      if (!touch) continue;
      Vec y = vg.coord(id);
      Vec c = dom.project_to_boundary(y);
      Vec g = field(c);
      double gn = g.dot(dom.normal(c));
      if (!(gn > 0)) throw ObliqueViolation("ghost stencil: gamma.n <= 0 at a boundary point", gn, c);
      double s = (std::abs(dom.signed_distance(y)) + vg.h) / gn;
      bool ok = false;
      for (int tries = 0; tries < 12 && !ok; ++tries) {
        ok = corner_weights(vg, y - s * g, idx, w);
        s += 0.5 * vg.h / gn;
      }
      if (!ok) throw GeometryError("ghost stencil: no active nodes along -gamma", y);
      vg.ghosts.push_back({id, idx, w});
    }
  return vg;
}

struct CoeffBounds {
  double b[2] = {0, 0};
  double a[2][2] = {{0, 0}, {0, 0}};
  double b_norm = 0, sigma_norm2 = 0, a_norm = 0;
};

CoeffBounds coefficient_bounds(const ValueGrid& vg, const CoefficientField& c, double eps, bool use_eps,
                               const GridParams& gp) {
  CoeffBounds cb;
  for (int s = 0; s <= 4; ++s) {
    double t = gp.t0 + (gp.T - gp.t0) * s / 4.0;
    for (size_t id = 0; id < vg.active.size(); ++id) {
      if (!vg.active[id]) continue;
      Vec x = vg.coord(static_cast<int>(id));
      Vec b = use_eps ? c.b_eps(eps, t, x) : c.b(t, x);
      Mat sg = use_eps ? c.sigma_eps(eps, t, x) : c.sigma(t, x);
      Mat a = sg * sg.transpose();
      for (int k = 0; k < vg.dim; ++k) {
        cb.b[k] = std::max(cb.b[k], std::abs(b(k)));
        for (int l = 0; l < vg.dim; ++l) cb.a[k][l] = std::max(cb.a[k][l], std::abs(a(k, l)));
      }
      cb.b_norm = std::max(cb.b_norm, b.norm());
      cb.sigma_norm2 = std::max(cb.sigma_norm2, sg.squaredNorm());
      Eigen::SelfAdjointEigenSolver<Mat> es(a);
      cb.a_norm = std::max(cb.a_norm, es.eigenvalues().cwiseAbs().maxCoeff());
    }
  }
  return cb;
}

double obstacle_oscillation(const ValueGrid& vg, const Obstacle& psi, const std::function<double(const Vec&)>* term,
                            const GridParams& gp) {
  double lo = kInf, hi = -kInf;
  for (int s = 0; s <= 16; ++s) {
    double t = gp.t0 + (gp.T - gp.t0) * s / 16.0;
    for (size_t id = 0; id < vg.active.size(); ++id) {
      if (!vg.active[id]) continue;
      Vec x = vg.coord(static_cast<int>(id));
      double v = psi(t, x);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      if (term && s == 16) {
        double tv = (*term)(x);
        lo = std::min(lo, tv);
        hi = std::max(hi, tv);
      }
    }
  }
  return hi - lo;
}

ValueGrid run_scheme(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                     const Obstacle& psi, double eps, Mode mode, const std::function<double(const Vec&)>& terminal,
                     const GridParams& gp) {
  if (!(gp.T > gp.t0)) throw Error("grid params: need T > t0");
  if (dom.dim() > 2) throw Error("hjbvi: dimension above 2 is unsupported");
  const int cells = default_cells(dom, gp);
  ValueGrid vg = build_lattice(dom, field, cells);
  const int d = vg.dim;
  const double h = vg.h;
  const bool linear = mode == Mode::linear_inf || mode == Mode::linear_sup;
  const bool use_eps = eps > 0;

  CoeffBounds cb = coefficient_bounds(vg, coeffs, eps, use_eps, gp);
  double G = gp.grad_estimate;
  if (!(G > 0)) G = std::max(1.0, obstacle_oscillation(vg, psi, &terminal, gp) / h);
  double rate = 0.0;
  for (int k = 0; k < d; ++k) {
    double th = cb.b[k];
    if (!linear)
      for (int l = 0; l < d; ++l) th += cb.a[k][l] * G;
    rate += th / h + eps * eps * cb.a[k][k] / (h * h);
  }
  double bound = rate > 0 ? 1.0 / rate : kInf;
  if (!linear) bound = std::min(bound, h / (cb.b_norm + cb.sigma_norm2 * G + h));
  if (eps > 0 && cb.a_norm > 0) bound = std::min(bound, h * h / (eps * eps * cb.a_norm * d));
  if (!std::isfinite(bound)) bound = (gp.T - gp.t0);
  vg.cfl_bound = bound;
  double dt_target = gp.dt > 0 ? gp.dt : gp.cfl_fraction * bound;
  if (gp.dt > 0 && gp.dt > bound * (1 + 1e-12))
    throw CflViolation("time step " + std::to_string(gp.dt) + " exceeds the monotonicity bound " +
                       std::to_string(bound));
  long nt = static_cast<long>(std::ceil((gp.T - gp.t0) / dt_target - 1e-9));
  nt = std::max(1L, nt);
  const double dt = (gp.T - gp.t0) / nt;
  vg.dt = dt;
  vg.time_steps = nt;

  const int N = vg.nx * vg.ny;
  std::vector<int> act;
  for (int id = 0; id < N; ++id)
    if (vg.active[id]) act.push_back(id);
  std::vector<Vec> X(N);
  for (int id = 0; id < N; ++id) X[id] = vg.coord(id);
  // interior nodes for residual diagnostics: whole 3x3 neighbourhood active
  std::vector<char> deep(N, 0);
  for (int id : act) {
    int i = id % vg.nx, j = id / vg.nx;
    bool ok = true;
    for (int dj = (d == 2 ? -1 : 0); dj <= (d == 2 ? 1 : 0); ++dj)
      for (int di = -1; di <= 1; ++di) ok = ok && vg.active[vg.index(i + di, j + dj)];
    deep[id] = ok;
  }

  std::vector<double> V(N, kNaN), Vn(N, kNaN);
  for (int id : act) V[id] = terminal(X[id]);

  // stored layer step indices (counted backward from T)
  int L = std::max(2, gp.stored_layers);
  std::vector<long> store;
  for (int l = 0; l < L; ++l) store.push_back(std::lround(static_cast<double>(nt) * l / (L - 1)));
  store.erase(std::unique(store.begin(), store.end()), store.end());
  std::vector<std::vector<double>> layers_rev;
  std::vector<double> times_rev;
  size_t next_store = 0;
  auto maybe_store = [&](long n_done, double t) {
    if (next_store < store.size() && store[next_store] == n_done) {
      layers_rev.push_back(V);
      times_rev.push_back(t);
      ++next_store;
    }
  };
  maybe_store(0, gp.T);

  const int stride[2] = {1, vg.nx};
  const double e2h = 0.5 * eps * eps;
  ComplementarityReport cr;
  Vec b(d);
  Mat sg, a;
  for (long n = 1; n <= nt; ++n) {
    double t_old = gp.T - (n - 1) * dt;
    double t_new = (n == nt) ? gp.t0 : gp.T - n * dt;
    for (const auto& gs : vg.ghosts) {
      double v = 0.0;
      for (size_t q = 0; q < gs.sources.size(); ++q) v += gs.weights[q] * V[gs.sources[q]];
      V[gs.node] = v;
    }
    for (int id : act) {
      const Vec& x = X[id];
      b = use_eps ? coeffs.b_eps(eps, t_old, x) : coeffs.b(t_old, x);
      sg = use_eps ? coeffs.sigma_eps(eps, t_old, x) : coeffs.sigma(t_old, x);
      a = sg * sg.transpose();
      const double v0 = V[id];
      double pm[2], pp[2];
      for (int k = 0; k < d; ++k) {
        pm[k] = (v0 - V[id - stride[k]]) / h;
        pp[k] = (V[id + stride[k]] - v0) / h;
      }
      double diff = 0.0;
      if (eps > 0) {
        double tr = 0.0;
        for (int k = 0; k < d; ++k) tr += a(k, k) * (pp[k] - pm[k]) / h;
        if (d == 2 && a(0, 1) != 0.0) {
          const int sx = stride[0], sy = stride[1];
          double axis = V[id + sx] + V[id - sx] + V[id + sy] + V[id - sy];
          double dxy = a(0, 1) > 0 ? (V[id + sx + sy] + V[id - sx - sy] + 2 * v0 - axis) / (2 * h * h)
                                   : -(V[id + sx - sy] + V[id - sx + sy] + 2 * v0 - axis) / (2 * h * h);
          tr += 2 * a(0, 1) * dxy;
        }
        diff = e2h * tr;
      }
      double cont, Hc;
      const bool separable = d == 1 || a(0, 1) == 0.0;
      if (!linear && separable && gp.flux == Flux::godunov) {
        double Hg = 0.0;
        for (int k = 0; k < d; ++k) {
          double akk = a(k, k), bk = b(k);
          auto hk = [akk, bk](double q) { return 0.5 * akk * q * q - bk * q; };
          double q_lo, q_hi;
          if (akk > 0) {
            q_lo = q_hi = bk / akk;
          } else {
            // linear in q: minimizer at -inf or +inf
            q_lo = q_hi = bk > 0 ? kInf : -kInf;
          }
          Hg += std::max(hk(std::max(pm[k], q_lo)), hk(std::min(pp[k], q_hi)));
        }
        cont = v0 - dt * Hg + dt * diff;
        Hc = Hg - diff;
      } else if (!linear) {
        double pbar[2], Hbar = 0.0, visc = 0.0;
        for (int k = 0; k < d; ++k) pbar[k] = 0.5 * (pm[k] + pp[k]);
        for (int k = 0; k < d; ++k) {
          double ap = 0.0;
          for (int l = 0; l < d; ++l) ap += a(k, l) * pbar[l];
          Hbar += 0.5 * pbar[k] * ap - b(k) * pbar[k];
          double th = std::abs(b(k));
          for (int l = 0; l < d; ++l) th += std::abs(a(k, l)) * std::max(std::abs(pm[l]), std::abs(pp[l]));
          visc += th * (pp[k] - pm[k]) * 0.5;
        }
        cont = v0 - dt * (Hbar - visc) + dt * diff;
        Hc = Hbar - visc - diff;
      } else {
        double drift = 0.0;
        for (int k = 0; k < d; ++k) drift += b(k) * (b(k) > 0 ? pp[k] : pm[k]);
        cont = v0 + dt * (drift + diff);
        Hc = -drift - diff;
      }
      double ob = psi(t_new, x);
      double vnew;
      switch (mode) {
        case Mode::nonlinear_min:
        case Mode::linear_sup: vnew = std::max(ob, cont); break;
        default: vnew = std::min(ob, cont); break;
      }
      if (!std::isfinite(vnew)) throw NumericalBreakdown("hjbvi: non-finite value", n);
      Vn[id] = vnew;
      double gap = (mode == Mode::nonlinear_min || mode == Mode::linear_sup) ? vnew - ob : ob - vnew;
      cr.min_gap = std::min(cr.min_gap, gap);
      if (deep[id]) {
        double res = std::abs(-(v0 - vnew) / dt + Hc);
        cr.max_residual = std::max(cr.max_residual, vnew == ob ? 0.0 : res);
        cr.max_violation = std::max(cr.max_violation, std::min(res, std::abs(vnew - ob)));
      }
    }
    for (int id : act) V[id] = Vn[id];
    maybe_store(n, t_new);
  }
  for (auto& layer : layers_rev)
    for (int id = 0; id < N; ++id)
      if (!vg.active[id]) layer[id] = kNaN;
  vg.layers.assign(layers_rev.rbegin(), layers_rev.rend());
  vg.times.assign(times_rev.rbegin(), times_rev.rend());
  vg.complementarity = cr;
  return vg;
}

}  // namespace

Vec ValueGrid::coord(int idx) const {
  int i = idx % nx, j = idx / nx;
  if (dim == 1) return vec1(lo[0] + i * h);
  return vec2(lo[0] + i * h, lo[1] + j * h);
}

int ValueGrid::n_active() const { return static_cast<int>(std::count(active.begin(), active.end(), 1)); }

double ValueGrid::value(int layer, const Vec& x) const {
  std::vector<int> idx;
  std::vector<double> w;
  if (!corner_weights(*this, x, idx, w)) throw Error("ValueGrid::value: point has no active neighbours");
  double v = 0.0;
  for (size_t q = 0; q < idx.size(); ++q) v += w[q] * layers.at(layer)[idx[q]];
  return v;
}

void ValueGrid::write_csv(std::ostream& os) const {
  os << (dim == 1 ? "t,x1,v\n" : "t,x1,x2,v\n");
  os.precision(17);
  for (size_t l = 0; l < layers.size(); ++l)
    for (size_t id = 0; id < active.size(); ++id) {
      if (!active[id]) continue;
      Vec x = coord(static_cast<int>(id));
      os << times[l];
      for (int k = 0; k < dim; ++k) os << ',' << x(k);
      os << ',' << layers[l][id] << '\n';
    }
}

void ValueGrid::write_binary(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  auto put = [&](const void* p, size_t n) { f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); };
  const char magic[8] = {'R', 'L', 'D', 'P', 'V', 'G', '1', 0};
  put(magic, 8);
  std::int32_t hdr[4] = {dim, nx, ny, static_cast<std::int32_t>(layers.size())};
  put(hdr, sizeof hdr);
  double geo[4] = {lo[0], lo[1], h, dt};
  put(geo, sizeof geo);
  put(times.data(), times.size() * sizeof(double));
  put(active.data(), active.size());
  for (const auto& l : layers) put(l.data(), l.size() * sizeof(double));
}

ValueGrid ValueGrid::read_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  auto get = [&](void* p, size_t n) {
    f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!f) throw Error("truncated value grid file " + path);
  };
  char magic[8];
  get(magic, 8);
  if (std::memcmp(magic, "RLDPVG1", 7) != 0) throw Error("not a value grid file: " + path);
  std::int32_t hdr[4];
  get(hdr, sizeof hdr);
  ValueGrid vg;
  vg.dim = hdr[0];
  vg.nx = hdr[1];
  vg.ny = hdr[2];
  double geo[4];
  get(geo, sizeof geo);
  vg.lo[0] = geo[0];
  vg.lo[1] = geo[1];
  vg.h = geo[2];
  vg.dt = geo[3];
  vg.times.resize(hdr[3]);
  get(vg.times.data(), vg.times.size() * sizeof(double));
  vg.active.resize(static_cast<size_t>(vg.nx) * vg.ny);
  get(vg.active.data(), vg.active.size());
  vg.layers.assign(hdr[3], std::vector<double>(vg.active.size()));
  for (auto& l : vg.layers) get(l.data(), l.size() * sizeof(double));
  return vg;
}

Obstacle tube_obstacle(const EventSpec& ev, int i, double height, bool complement, double width) {
  return [ev, i, height, complement, width](double t, const Vec& x) {
    double dist = (x - ev.references[i](t)).norm() - ev.radii[i];
    double s = width > 0 ? std::clamp(dist / width + 0.5, 0.0, 1.0) : (dist >= 0 ? 1.0 : 0.0);
    return height * (complement ? s : 1.0 - s);
  };
}

double grid_cell_size(const Domain& dom, const GridParams& gp) {
  int cells = default_cells(dom, gp);
  if (dom.dim() == 1) {
    double len = dom.kind() == DomainKind::interval ? 2 * dom.param_a() : dom.box_hi()(0) - dom.box_lo()(0);
    return len / cells;
  }
  Vec ext = dom.box_hi() - dom.box_lo();
  return std::max(ext(0), ext(1)) / cells;
}

ValueGrid solve_limit_vi(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                         const Obstacle& obstacle, ViType vi_type, const std::function<double(const Vec&)>& terminal,
                         const GridParams& gp) {
  return run_scheme(dom, field, coeffs, obstacle, 0.0,
                    vi_type == ViType::min_type ? Mode::nonlinear_min : Mode::nonlinear_max, terminal, gp);
}

ValueGrid solve_eps_vi(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                       const Obstacle& obstacle, NoiseScale eps, ViType vi_type,
                       const std::function<double(const Vec&)>& terminal, const GridParams& gp) {
  return run_scheme(dom, field, coeffs, obstacle, eps.eps,
                    vi_type == ViType::min_type ? Mode::nonlinear_min : Mode::nonlinear_max, terminal, gp);
}

ValueGrid solve_linear_vi(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                          const Obstacle& psi, NoiseScale eps, StopType stop, const GridParams& gp) {
  double T = gp.T;
  auto terminal = [&psi, T](const Vec& x) { return psi(T, x); };
  return run_scheme(dom, field, coeffs, psi, eps.eps, stop == StopType::inf_stop ? Mode::linear_inf : Mode::linear_sup,
                    terminal, gp);
}

ValueGrid log_transform(const ValueGrid& u, NoiseScale eps) {
  if (!(eps.eps > 0)) throw Error("log_transform: eps must be positive");
  ValueGrid v = u;
  const double e2 = eps.eps * eps.eps;
  for (size_t l = 0; l < v.layers.size(); ++l)
    for (size_t id = 0; id < v.active.size(); ++id) {
      if (!v.active[id]) continue;
      double x = u.layers[l][id];
      if (!(x > 0)) {
        Vec c = u.coord(static_cast<int>(id));
        std::ostringstream os;
        os << "log_transform: nonpositive value " << x << " at t=" << u.times[l] << " x=(" << c(0);
        if (c.size() > 1) os << "," << c(1);
        os << ")";
        throw Error(os.str());
      }
      v.layers[l][id] = -e2 * std::log(x);
    }
  return v;
}

}  // namespace rldp
