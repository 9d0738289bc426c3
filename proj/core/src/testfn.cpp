#include "rldp/testfn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

namespace rldp {

namespace {

constexpr double kGaussNodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                   0.9061798459386640};
constexpr double kGaussWeights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                     0.4786286704993665, 0.2369268850561891};

double bump(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

// 1 on [0, 0.5 R], 0 beyond 0.9 R, smooth in between
double cutoff(double dist, double reach) {
  double s = (dist - 0.5 * reach) / (0.4 * reach);
  if (s <= 0) return 1.0;
  if (s >= 1) return 0.0;
  double f0 = std::exp(-1.0 / s), f1 = std::exp(-1.0 / (1.0 - s));
  return f1 / (f0 + f1);
}

// Mirror a point back into the closure across the boundary.
Vec fold_in(const Domain& dom, Vec y) {
  double sd = dom.signed_distance(y);
  if (sd >= 0) return y;
  Vec p = dom.project_to_boundary(y);
  Vec z = p - sd * dom.normal(p);
  if (dom.signed_distance(z) < 0) return p;
  return z;
}

class BoundaryTable {
 public:
  explicit BoundaryTable(const Domain& dom) : pts_(dom.sample_boundary(dom.dim() == 1 ? 2 : 65536)) {}
  const Vec& at(unsigned long k) const {
    if (pts_.size() == 2) return pts_[k % 2];
    auto idx = static_cast<size_t>(radical_inverse(k + 1, 2) * pts_.size());
    return pts_[std::min(idx, pts_.size() - 1)];
  }

 private:
  std::vector<Vec> pts_;
};

// Sequential Halton candidates in the bounding box, rejected outside the closure.
class HaltonStream {
 public:
  HaltonStream(const Domain& dom, unsigned b0, unsigned b1) : dom_(dom), b0_(b0), b1_(b1) {}
  Vec next() {
    for (;;) {
      ++i_;
      Vec x(dom_.dim());
      const Vec& lo = dom_.box_lo();
      const Vec& hi = dom_.box_hi();
      x(0) = lo(0) + (hi(0) - lo(0)) * radical_inverse(i_, b0_);
      if (dom_.dim() == 2) x(1) = lo(1) + (hi(1) - lo(1)) * radical_inverse(i_, b1_);
      if (dom_.signed_distance(x) >= 0) return x;
    }
  }

 private:
  const Domain& dom_;
  unsigned b0_, b1_;
  unsigned long i_ = 0;
};

Vec offset(const Domain& dom, unsigned long k, double radius) {
  double u = radical_inverse(k + 1, 5), v = radical_inverse(k + 1, 7);
  Vec o(dom.dim());
  if (dom.dim() == 1) {
    o(0) = radius * (2 * u - 1);
  } else {
    double th = 2 * std::numbers::pi * v;
    o(0) = radius * u * std::cos(th);
    o(1) = radius * u * std::sin(th);
  }
  return o;
}

template <class F>
void parallel_for(size_t n, F&& f) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  size_t nt = std::min<size_t>(hw, std::max<size_t>(1, n / 256));
  if (nt <= 1) {
    for (size_t i = 0; i < n; ++i) f(i, 0);
    return;
  }
  std::vector<std::thread> pool;
  for (size_t t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      for (size_t i = t; i < n; i += nt) f(i, t);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<std::pair<Vec, Vec>> testfn_pairs(const Domain& dom, int n, double rho) {
  std::vector<std::pair<Vec, Vec>> out;
  out.reserve(n);
  HaltonStream xs(dom, 2, 3), ys(dom, 5, 7);
  BoundaryTable bdry(dom);
  for (int k = 0; k < n; ++k) {
    Vec x = xs.next();
    Vec y = ys.next();
    switch (k % 4) {
      case 0: break;
      case 1: y = fold_in(dom, x + offset(dom, k, 2 * rho)); break;
      case 2: y = x; break;
      case 3: x = bdry.at(k); y = fold_in(dom, x + offset(dom, k, 4 * rho)); break;
    }
    out.emplace_back(x, y);
  }
  return out;
}

std::vector<std::pair<Vec, Vec>> testfn_boundary_pairs(const Domain& dom, int n, double rho) {
  std::vector<std::pair<Vec, Vec>> out;
  out.reserve(n);
  HaltonStream ys(dom, 5, 7);
  BoundaryTable bdry(dom);
  for (int k = 0; k < n; ++k) {
    Vec x = bdry.at(k);
    Vec y = ys.next();
    switch (k % 4) {
      case 0: y = x; break;
      case 1: y = fold_in(dom, x + offset(dom, k, rho)); break;
      case 2: y = fold_in(dom, x + offset(dom, k, 8 * rho)); break;
      case 3: break;
    }
    out.emplace_back(x, y);
  }
  return out;
}

TestFunction::TestFunction(const Domain& dom, const ObliqueField& field, double eps, double rho, double A, double B,
                           double C)
    : dom_(dom), field_(field), eps_(eps), rho_(rho), A_(A), B_(B), C_(C) {
  if (!(eps > 0) || !(rho > 0)) throw Error("TestFunction: eps and rho must be positive");
  dmax_ = dom.max_distance();
  reach_ = dom.reach();
  if (!(reach_ > 0)) throw DegenerateGeometry("TestFunction: domain reach must be positive");
}

Vec TestFunction::mu(const Vec& x) const {
  Vec p = dom_.project_to_boundary(x);
  Vec g = field_(p);
  return g / g.dot(dom_.normal(p));
}

Vec TestFunction::mu_ext(const Vec& x) const {
  double chi = cutoff(std::abs(dom_.signed_distance(x)), reach_);
  if (chi == 0.0) return Vec::Zero(dom_.dim());
  return chi * mu(x);
}

Vec TestFunction::mu_rho(const Vec& x) const {
  const int d = dom_.dim();
  Vec acc = Vec::Zero(d);
  double wsum = 0.0;
  if (d == 1) {
    for (int i = 0; i < 5; ++i) {
      double z = kGaussNodes[i];
      double w = kGaussWeights[i] * bump(z * z);
      acc += w * mu_ext(x - vec1(rho_ * z));
      wsum += w;
    }
  } else {
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        double z0 = kGaussNodes[i], z1 = kGaussNodes[j];
        double w = kGaussWeights[i] * kGaussWeights[j] * bump(z0 * z0 + z1 * z1);
        if (w == 0.0) continue;
        acc += w * mu_ext(x - vec2(rho_ * z0, rho_ * z1));
        wsum += w;
      }
  }
  return acc / wsum;
}

double TestFunction::phi(const Vec& x, const Vec& y) const {
  Vec w = (x - y) / eps_;
  double delta = (d(x) - d(y)) / eps_;
  return w.squaredNorm() + 2 * w.dot(mu_rho(0.5 * (x + y))) * delta + A_ * delta * delta;
}

double TestFunction::psi(const Vec& x, const Vec& y) const {
  double q = rho_ * rho_ / (eps_ * eps_);
  return std::exp(C_ * (2 * dmax_ - d(x) - d(y))) * phi(x, y) - B_ * q * (d(x) + d(y));
}

Vec TestFunction::grad_x(const Vec& x, const Vec& y, double h) const {
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (psi(xp, y) - psi(xm, y)) / (2 * h);
  }
  return g;
}

Vec TestFunction::grad_y(const Vec& x, const Vec& y, double h) const {
  Vec g(y.size());
  for (int i = 0; i < y.size(); ++i) {
    Vec yp = y, ym = y;
    yp(i) += h;
    ym(i) -= h;
    g(i) = (psi(x, yp) - psi(x, ym)) / (2 * h);
  }
  return g;
}

void TestFunction::psi_iii_parts(const Vec& x, const Vec& y, bool wrt_x, double h, double& base,
                                 double& per_B) const {
  const Vec& b = wrt_x ? x : y;
  Vec g = field_(b);
  double q = rho_ * rho_ / (eps_ * eps_);
  auto weighted = [&](const Vec& xx, const Vec& yy) {
    return std::exp(C_ * (2 * dmax_ - d(xx) - d(yy))) * phi(xx, yy);
  };
  base = 0.0;
  per_B = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    Vec bp = b, bm = b;
    bp(i) += h;
    bm(i) -= h;
    double dw = wrt_x ? weighted(bp, y) - weighted(bm, y) : weighted(x, bp) - weighted(x, bm);
    double dd = d(bp) - d(bm);
    base += g(i) * dw / (2 * h);
    per_B += -q * g(i) * dd / (2 * h);
  }
}

TestFunction build_testfn(const Domain& dom, const ObliqueField& field, double eps, double rho,
                          const TestFnOptions& opts) {
  if (!(eps > 0 && eps <= 1) || !(rho > 0 && rho <= 1)) throw Error("build_testfn: eps and rho must lie in (0,1]");
  const int n = std::max(16, opts.search_samples);
  auto pairs = testfn_pairs(dom, n, rho);
  auto bpairs = testfn_boundary_pairs(dom, n, rho);

  // A: lower half of the phi sandwich
  TestFunction probe(dom, field, eps, rho, 0.0, 0.0, 0.0);
  double A_need = 0.0;
  std::vector<double> needs(pairs.size() + bpairs.size(), 0.0);
  parallel_for(needs.size(), [&](size_t i, size_t) {
    const auto& pr = i < pairs.size() ? pairs[i] : bpairs[i - pairs.size()];
    Vec w = (pr.first - pr.second) / eps;
    double delta = (probe.d(pr.first) - probe.d(pr.second)) / eps;
    if (delta == 0.0) return;
    double rest = 0.5 * w.squaredNorm() + 2 * w.dot(probe.mu_rho(0.5 * (pr.first + pr.second))) * delta;
    needs[i] = -rest / (delta * delta);
  });
  for (double v : needs) A_need = std::max(A_need, v);
  double A = 1.0;
  while (A < A_need) {
    A *= 2;
    if (A > opts.max_constant) {
      std::ostringstream os;
      os << "build_testfn: A exceeds 2^40 (needed " << A_need << ")";
      throw ConstructionFailed(os.str());
    }
  }

  // B for each C in the doubling sequence; the first C with an admissible B wins
  std::ostringstream worst;
  for (double C = 1.0; C <= opts.max_constant; C *= 2) {
    TestFunction tf(dom, field, eps, rho, A, 0.0, C);
    std::vector<double> bneed(2 * bpairs.size(), 0.0);
    std::vector<char> bad(2 * bpairs.size(), 0);
    parallel_for(bneed.size(), [&](size_t i, size_t) {
      const auto& pr = bpairs[i % bpairs.size()];
      bool wrt_x = i < bpairs.size();
      double base, per_B;
      if (wrt_x)
        tf.psi_iii_parts(pr.first, pr.second, true, opts.fd_step, base, per_B);
      else
        tf.psi_iii_parts(pr.second, pr.first, false, opts.fd_step, base, per_B);
      if (per_B > 0)
        bneed[i] = base > 0 ? 0.0 : -base / per_B;
      else if (base <= 0)
        bad[i] = 1;
    });
    double B_need = 0.0;
    size_t arg = 0;
    bool any_bad = false;
    for (size_t i = 0; i < bneed.size(); ++i) {
      if (bad[i]) any_bad = true;
      if (bneed[i] > B_need) {
        B_need = bneed[i];
        arg = i;
      }
    }
    if (any_bad) continue;
    double B = 1.0;
    // one extra doubling beyond the sampled requirement keeps fresh samples strictly positive
    while (B < 2 * B_need) B *= 2;
    if (B <= opts.max_constant) return TestFunction(dom, field, eps, rho, A, B, C);
    const auto& pr = bpairs[arg % bpairs.size()];
    worst.str("");
    worst << " (worst sample x=" << pr.first.transpose() << " y=" << pr.second.transpose() << " needs B=" << B_need
          << ")";
  }
  throw ConstructionFailed("build_testfn: doubling search for B, C exceeds 2^40" + worst.str());
}

TestFnReport check_testfn_properties(const TestFunction& tf, int n_samples, double fd_step) {
  const Domain& dom = tf.domain();
  const double eps = tf.eps(), rho = tf.rho();
  const double q = rho * rho / (eps * eps);
  auto pairs = testfn_pairs(dom, n_samples, rho);
  auto bpairs = testfn_boundary_pairs(dom, n_samples, rho);

  struct Acc {
    double Ki = 0, Kii = 0, min3 = kInf, mu_err = 0, K1 = 0;
  };
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::vector<Acc> acc(hw);

  auto sandwich = [&](Acc& a, const Vec& x, const Vec& y) {
    double r = (x - y).norm();
    double r2 = r * r / (eps * eps);
    double ps = tf.psi(x, y);
    a.Ki = std::max({a.Ki, (0.5 * r2 - ps) / q, ps / (r2 + q)});
    Vec gx = tf.grad_x(x, y, fd_step), gy = tf.grad_y(x, y, fd_step);
    a.Kii = std::max({a.Kii, (gx + gy).norm() / (r2 + q), (gx.norm() + gy.norm()) / (r / (eps * eps) + q)});
  };

  const size_t total = pairs.size() + bpairs.size();
  parallel_for(total, [&](size_t i, size_t t) {
    Acc& a = acc[t % acc.size()];
    if (i < pairs.size()) {
      sandwich(a, pairs[i].first, pairs[i].second);
      return;
    }
    const auto& [xb, yi] = bpairs[i - pairs.size()];
    sandwich(a, xb, yi);
    sandwich(a, yi, xb);
    Vec g = tf.field()(xb);
    a.min3 = std::min(a.min3, tf.grad_x(xb, yi, fd_step).dot(g));
    a.min3 = std::min(a.min3, tf.grad_y(yi, xb, fd_step).dot(g));
    Vec m = tf.mu_rho(xb);
    a.mu_err = std::max(a.mu_err, (m - tf.mu(xb)).norm());
    double jac = 0.0;
    for (int k = 0; k < xb.size(); ++k) {
      Vec p = xb, mpt = xb;
      p(k) += fd_step;
      mpt(k) -= fd_step;
      jac += ((tf.mu_rho(p) - tf.mu_rho(mpt)) / (2 * fd_step)).squaredNorm();
    }
    a.K1 = std::max(a.K1, m.norm() + std::sqrt(jac));
  });

  TestFnReport rep;
  for (const Acc& a : acc) {
    rep.K_psi_i = std::max(rep.K_psi_i, a.Ki);
    rep.K_psi_ii = std::max(rep.K_psi_ii, a.Kii);
    rep.min_psi_iii = std::min(rep.min_psi_iii, a.min3);
    rep.max_mu_error = std::max(rep.max_mu_error, a.mu_err);
    rep.K1 = std::max(rep.K1, a.K1);
  }
  rep.n_pairs = static_cast<int>(pairs.size());
  rep.n_boundary_pairs = static_cast<int>(bpairs.size());
  return rep;
}

}  // namespace rldp
