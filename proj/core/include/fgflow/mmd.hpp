#pragma once

#include "fgflow/kernel.hpp"
#include "fgflow/types.hpp"

namespace fgflow {

/// Mean of the target-target Gram block, i.e. the |m_target|^2 term of the
/// squared MMD. It does not change along a flow, so callers may compute it
/// once and pass it to the overload below.
double target_self_term(const KernelParams& p, const EmpiricalMeasure& target);

/// Biased V-statistic form (diagonal included):
/// (1/N^2) sum k(z_i,z_j) - (2/NM) sum k(z_i,zbar_j) + (1/M^2) sum k(zbar_i,zbar_j).
/// Tiny negatives from roundoff are clamped to zero.
double mmd_squared(const KernelParams& p, const EmpiricalMeasure& rho,
                   const EmpiricalMeasure& target);
double mmd_squared(const KernelParams& p, const EmpiricalMeasure& rho,
                   const EmpiricalMeasure& target, double cached_target_term);

/// Flow objective, half the squared MMD.
double loss(const KernelParams& p, const EmpiricalMeasure& rho, const EmpiricalMeasure& target);

/// Empirical decrease rate of the loss along the flow:
/// (1/N) sum_i | witness(rho, z_i) - witness(target, z_i) |^2_{z_i}.
double dissipation(const KernelParams& p, const EmpiricalMeasure& rho,
                   const EmpiricalMeasure& target);

}  // namespace fgflow
