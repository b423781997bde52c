#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fgflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Positivity floor for covariance eigenvalues. Every SPD validation in the
/// library uses this value unless the caller passes its own.
inline constexpr double kSpdFloor = 1e-10;

/// Relative tolerance for the symmetry check max|A_ij - A_ji| <= tol * max(1, max|A_ij|).
inline constexpr double kSymTol = 1e-12;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotSpdError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotSymmetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown by exp_map when I + t L_Sigma[V] leaves the SPD cone.
class InfeasibleStepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by the flow engine when step backoff runs out of retries.
class SafeguardExhaustedError : public std::runtime_error {
 public:
  SafeguardExhaustedError(const std::string& what, int tau, int particle)
      : std::runtime_error(what), tau(tau), particle(particle) {}
  int tau = -1;
  int particle = -1;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line(line) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
  int line = -1;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point z = (x, mu, Sigma) on the feature-Gaussian manifold
/// R^m x R^n x S^n_++.
struct Particle {
  Vector x;
  Vector mu;
  Matrix sigma;

  int feature_dim() const { return static_cast<int>(x.size()); }
  int lifted_dim() const { return static_cast<int>(mu.size()); }
};

/// Tangent vector (w, v, V) at a Particle; V is symmetric.
struct TangentVector {
  Vector w;
  Vector v;
  Matrix V;

  static TangentVector zero(int m, int n) {
    return {Vector::Zero(m), Vector::Zero(n), Matrix::Zero(n, n)};
  }

  TangentVector operator*(double c) const { return {c * w, c * v, c * V}; }
  TangentVector operator+(const TangentVector& o) const { return {w + o.w, v + o.v, V + o.V}; }
  TangentVector operator-(const TangentVector& o) const { return {w - o.w, v - o.v, V - o.V}; }
};

/// Uniformly weighted finite set of particles, optionally labeled.
/// Labels, when present, run parallel to the particle list.
struct EmpiricalMeasure {
  std::vector<Particle> particles;
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(particles.size()); }
  bool labeled() const { return !labels.empty(); }
  int feature_dim() const { return particles.empty() ? 0 : particles.front().feature_dim(); }
  int lifted_dim() const { return particles.empty() ? 0 : particles.front().lifted_dim(); }

  void validate(double spd_floor = kSpdFloor) const;
};

}  // namespace fgflow
