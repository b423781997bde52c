#pragma once

#include "fgflow/lifting.hpp"
#include "fgflow/types.hpp"

#include <string>
#include <vector>

namespace fgflow {

class InfeasibleMarginalsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// C_iy = sqrt(|mu_i - mu_y|^2 + B(Sigma_i, Sigma_y)^2); the feature leg is
/// deliberately unused. Columns follow the moments' label order.
struct CostMatrix {
  Matrix entries;
  std::vector<std::string> column_labels;
};

CostMatrix projection_cost(const EmpiricalMeasure& measure, const ClassMoments& moments);

struct TransportPlan {
  Matrix theta;

  double objective(const Matrix& cost) const;
};

/// Exact optimal plan for min <theta, cost> subject to the given marginals.
/// Transportation simplex with Bland's rule: the entering cell is the lowest
/// row-major index with negative reduced cost, the leaving cell the lowest
/// row-major index among the minimum-ratio cells.
TransportPlan solve_transportation(const Matrix& cost, const Vector& row_marginals,
                                   const Vector& col_marginals);

/// Assignment LP with row marginals 1/N and column marginals proportional to
/// the class counts (normalized to total mass 1), followed by per-row argmax
/// with lowest-label-index tie breaking.
std::vector<std::string> project_labels_lp(const EmpiricalMeasure& measure,
                                           const ClassMoments& moments);

/// Majority vote over the k ground-metric-nearest target particles; ties go
/// to the smallest summed distance, then the lowest label index.
std::vector<std::string> project_labels_knn(const EmpiricalMeasure& measure,
                                            const EmpiricalMeasure& target, int k);

}  // namespace fgflow
