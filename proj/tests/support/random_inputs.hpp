#pragma once

#include "fgflow/types.hpp"

#include <random>

namespace fgflow::testing {

inline Vector random_vec(std::mt19937_64& gen, int n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(gen);
  return v;
}

inline Matrix random_sym(std::mt19937_64& gen, int n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      a(i, j) = normal(gen);
      a(j, i) = a(i, j);
    }
  }
  return a;
}

/// Eigenvalues uniform in [lo, hi], random orthogonal frame.
inline Matrix random_spd(std::mt19937_64& gen, int n, double lo = 0.3, double hi = 2.5) {
  Matrix a = random_sym(gen, n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  std::uniform_real_distribution<double> unif(lo, hi);
  Vector lam(n);
  for (int i = 0; i < n; ++i) lam(i) = unif(gen);
  return 0.5 * (es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose()) +
         0.5 * (es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose()).transpose();
}

inline Particle random_particle(std::mt19937_64& gen, int m, int n, double spread = 1.0) {
  return {random_vec(gen, m, spread), random_vec(gen, n, spread), random_spd(gen, n)};
}

inline TangentVector random_tangent(std::mt19937_64& gen, int m, int n, double scale = 1.0) {
  return {random_vec(gen, m, scale), random_vec(gen, n, scale), random_sym(gen, n, scale)};
}

inline EmpiricalMeasure random_measure(std::mt19937_64& gen, int count, int m, int n,
                                       double spread = 1.0) {
  EmpiricalMeasure out;
  out.particles.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out.particles.push_back(random_particle(gen, m, n, spread));
  return out;
}

}  // namespace fgflow::testing
