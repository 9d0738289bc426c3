#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace rldp {

// Small fixed-capacity vectors: d, m <= 2, no heap traffic.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 2>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  GeometryError(const std::string& what, Vec last) : Error(what), last_iterate(std::move(last)) {}
  Vec last_iterate;
};

class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class ObliqueViolation : public Error {
 public:
  ObliqueViolation(const std::string& what, double min_dot_, Vec where_)
      : Error(what), min_dot(min_dot_), where(std::move(where_)) {}
  double min_dot;
  Vec where;
};

class ReflectionError : public Error {
 public:
  ReflectionError(const std::string& what, Vec p_) : Error(what), p(std::move(p_)) {}
  Vec p;
};

class NoContraction : public Error {
 public:
  using Error::Error;
};

class ConstructionFailed : public Error {
 public:
  using Error::Error;
};

class InfiniteEstimate : public Error {
 public:
  using Error::Error;
};

class CflViolation : public Error {
 public:
  using Error::Error;
};

class NumericalBreakdown : public Error {
 public:
  NumericalBreakdown(const std::string& what, long step_) : Error(what), step(step_) {}
  long step;
};

class StateSpaceTooLarge : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Van der Corput radical inverse; Halton points use bases 2, 3, 5, 7.
inline double radical_inverse(unsigned long i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

inline Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace rldp
