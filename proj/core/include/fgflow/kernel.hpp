#pragma once

#include "fgflow/manifold.hpp"
#include "fgflow/types.hpp"

namespace fgflow {

/// Bandwidths (alpha, beta, gamma) of the tensor Gaussian kernel on Z.
struct KernelParams {
  double alpha = 1.0;  // feature leg
  double beta = 1.0;   // mean leg
  double gamma = 1.0;  // covariance leg

  void validate() const;
};

/// k(z, zbar) = exp(-alpha |x-xbar|^2 - beta |mu-mubar|^2 - gamma |S-Sbar|_F^2).
double kernel_eval(const KernelParams& p, const Particle& z, const Particle& zbar);

/// Riemannian gradient of z -> k(z, zbar):
/// -2 k (alpha (x-xbar), beta (mu-mubar), 2 gamma (2 S^2 - S Sbar - Sbar S)).
TangentVector kernel_grad1(const KernelParams& p, const Particle& z, const Particle& zbar);

/// Mean of kernel_grad1(p, z, z_j) over the particles of the measure --
/// the Riemannian gradient of the measure's kernel mean embedding at z.
/// Summed in pairwise order so the result is independent of how callers
/// partition the particles across workers.
TangentVector witness_field(const KernelParams& p, const EmpiricalMeasure& measure,
                            const Particle& z);

/// G_ij = kernel_eval(p, a_i, b_j).
Matrix kernel_gram(const KernelParams& p, const EmpiricalMeasure& a, const EmpiricalMeasure& b);

}  // namespace fgflow
