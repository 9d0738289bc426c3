#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rldp/reflect.hpp"

namespace rldp {

struct NoiseScale {
  double eps = 0.0;  // eps = 0 is allowed and reproduces the deterministic stepper
  explicit NoiseScale(double e);
};

// Reference path g stored on a grid, linearly interpolated.
class ReferencePath {
 public:
  ReferencePath(TimeGrid grid, std::vector<Vec> points);
  static ReferencePath constant(const Vec& x, double t0, double T);
  // g(s) = x0 + v (s - t0)
  static ReferencePath linear(const Vec& x0, const Vec& v, double t0, double T, int n = 64);
  static ReferencePath from_path(const ReflectedPath& p);

  Vec operator()(double t) const;
  const TimeGrid& grid() const { return grid_; }
  const std::vector<Vec>& points() const { return points_; }

 private:
  TimeGrid grid_;
  std::vector<Vec> points_;
};

enum class EventKind { ball, intersection_of_complements };

struct EventSpec {
  EventKind kind = EventKind::ball;
  std::vector<ReferencePath> references;
  std::vector<double> radii;
  std::string id = "event";

  static EventSpec ball(ReferencePath g, double r, std::string id = "ball");
  static EventSpec complements(std::vector<ReferencePath> g, std::vector<double> r, std::string id = "complement");
  void validate(const Domain& dom) const;
  // tube B(g_i, r_i) membership at (t, x)
  bool in_tube(int i, double t, const Vec& x) const { return (x - references[i](t)).norm() < radii[i]; }
};

bool event_hit(const ReflectedPath& path, const EventSpec& event);

// Incremental node-by-node evaluation of an event; decided() allows early exit.
class EventTracker {
 public:
  explicit EventTracker(const EventSpec& ev);
  void observe(double t, const Vec& x);
  bool decided() const { return decided_; }
  bool hit() const;

 private:
  const EventSpec* ev_;
  std::vector<char> escaped_;
  int n_escaped_ = 0;
  bool decided_ = false;
  bool left_ball_ = false;
};

ReflectedPath simulate_reflected_sde(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                     NoiseScale eps, double t0, const Vec& x, const TimeGrid& grid,
                                     std::uint64_t seed, std::uint64_t trajectory = 0,
                                     const ReflectOptions& opts = {});

struct McEstimate {
  double p_hat = 0.0;
  long n_samples = 0;
  long n_hits = 0;
  double ci_half_width = 0.0;
  bool zero_hits = false;
};

McEstimate make_estimate(long hits, long n);

McEstimate estimate_event_probability(const Domain& dom, const ObliqueField& field, const CoefficientField& coeffs,
                                      NoiseScale eps, double t0, const Vec& x, const TimeGrid& grid,
                                      const EventSpec& event, long n_samples, std::uint64_t seed, int threads = 0);

struct LogRate {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

LogRate log_rate_estimate(const McEstimate& est, NoiseScale eps);

int resolve_threads(int requested);

}  // namespace rldp
