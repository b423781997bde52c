#include "fgflow/mmd.hpp"

#include <cmath>

namespace fgflow {

namespace {

void require_nonempty(const EmpiricalMeasure& rho, const EmpiricalMeasure& target) {
  if (rho.particles.empty() || target.particles.empty()) {
    throw DimensionError("mmd: empty measure");
  }
}

double clamp_tiny_negative(double v) {
  if (v < 0.0) {
    if (v < -1e-12) {
      throw std::logic_error("mmd_squared: negative value " + std::to_string(v) +
                             " exceeds roundoff tolerance");
    }
    return 0.0;
  }
  return v;
}

}  // namespace

double target_self_term(const KernelParams& p, const EmpiricalMeasure& target) {
  return kernel_gram(p, target, target).mean();
}

double mmd_squared(const KernelParams& p, const EmpiricalMeasure& rho,
                   const EmpiricalMeasure& target, double cached_target_term) {
  require_nonempty(rho, target);
  const double self = kernel_gram(p, rho, rho).mean();
  const double cross = kernel_gram(p, rho, target).mean();
  return clamp_tiny_negative(self - 2.0 * cross + cached_target_term);
}

double mmd_squared(const KernelParams& p, const EmpiricalMeasure& rho,
                   const EmpiricalMeasure& target) {
  return mmd_squared(p, rho, target, target_self_term(p, target));
}

double loss(const KernelParams& p, const EmpiricalMeasure& rho, const EmpiricalMeasure& target) {
  return 0.5 * mmd_squared(p, rho, target);
}

double dissipation(const KernelParams& p, const EmpiricalMeasure& rho,
                   const EmpiricalMeasure& target) {
  require_nonempty(rho, target);
  double acc = 0.0;
  for (const Particle& z : rho.particles) {
    const TangentVector grad = witness_field(p, rho, z) - witness_field(p, target, z);
    const double norm = tangent_norm(z, grad);
    acc += norm * norm;
  }
  return acc / static_cast<double>(rho.size());
}

}  // namespace fgflow
