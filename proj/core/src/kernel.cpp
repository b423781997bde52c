#include "fgflow/kernel.hpp"

#include <cmath>

namespace fgflow {

namespace {

void require_same_shape(const Particle& z, const Particle& zbar) {
  if (z.feature_dim() != zbar.feature_dim() || z.lifted_dim() != zbar.lifted_dim()) {
    throw DimensionError("kernel: particles do not share (m, n)");
  }
}

TangentVector pairwise_sum(const KernelParams& p, const std::vector<Particle>& pts,
                           const Particle& z, size_t lo, size_t hi) {
  if (hi - lo <= 8) {
    TangentVector acc = kernel_grad1(p, z, pts[lo]);
    for (size_t j = lo + 1; j < hi; ++j) {
      const TangentVector t = kernel_grad1(p, z, pts[j]);
      acc.w += t.w;
      acc.v += t.v;
      acc.V += t.V;
    }
    return acc;
  }
  const size_t mid = lo + (hi - lo) / 2;
  TangentVector left = pairwise_sum(p, pts, z, lo, mid);
  const TangentVector right = pairwise_sum(p, pts, z, mid, hi);
  left.w += right.w;
  left.v += right.v;
  left.V += right.V;
  return left;
}

}  // namespace

void KernelParams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma > 0.0) || !std::isfinite(alpha) ||
      !std::isfinite(beta) || !std::isfinite(gamma)) {
    throw std::invalid_argument("kernel bandwidths must be strictly positive and finite");
  }
}

double kernel_eval(const KernelParams& p, const Particle& z, const Particle& zbar) {
  require_same_shape(z, zbar);
  const double e = p.alpha * (z.x - zbar.x).squaredNorm() +
                   p.beta * (z.mu - zbar.mu).squaredNorm() +
                   p.gamma * (z.sigma - zbar.sigma).squaredNorm();
  return std::exp(-e);
}

TangentVector kernel_grad1(const KernelParams& p, const Particle& z, const Particle& zbar) {
  const double k = kernel_eval(p, z, zbar);
  const double c = -2.0 * k;
  Matrix v = 2.0 * p.gamma *
             (2.0 * z.sigma * z.sigma - z.sigma * zbar.sigma - zbar.sigma * z.sigma);
  return {c * p.alpha * (z.x - zbar.x), c * p.beta * (z.mu - zbar.mu), symmetrize(c * v)};
}

TangentVector witness_field(const KernelParams& p, const EmpiricalMeasure& measure,
                            const Particle& z) {
  if (measure.particles.empty()) {
    throw DimensionError("witness_field: empty measure");
  }
  TangentVector sum = pairwise_sum(p, measure.particles, z, 0, measure.particles.size());
  const double inv = 1.0 / static_cast<double>(measure.size());
  sum.w *= inv;
  sum.v *= inv;
  sum.V *= inv;
  return sum;
}

Matrix kernel_gram(const KernelParams& p, const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  Matrix g(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < b.size(); ++j) {
      g(i, j) = kernel_eval(p, a.particles[i], b.particles[j]);
    }
  }
  return g;
}

}  // namespace fgflow
