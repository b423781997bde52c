#include "fgflow/transport.hpp"

#include "fgflow/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace fgflow {

namespace {

constexpr double kPivotTol = 1e-12;

/// Spanning-tree basis of the transportation polytope. Nodes 0..n-1 are rows,
/// n..n+l-1 are columns.
struct Basis {
  int n = 0;
  int l = 0;
  std::vector<std::vector<char>> basic;  // n x l flags
  Matrix flow;

  int node_count() const { return n + l; }

  std::vector<std::vector<std::pair<int, int>>> adjacency() const {
    // adj[node] = list of (neighbor node, cell id i*l+j)
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<size_t>(node_count()));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < l; ++j) {
        if (basic[static_cast<size_t>(i)][static_cast<size_t>(j)]) {
          adj[static_cast<size_t>(i)].emplace_back(n + j, i * l + j);
          adj[static_cast<size_t>(n + j)].emplace_back(i, i * l + j);
        }
      }
    }
    return adj;
  }
};

/// u_i + v_j = c_ij on basic cells, anchored at u_0 = 0.
void solve_potentials(const Basis& basis, const Matrix& cost, Vector& u, Vector& v) {
  const auto adj = basis.adjacency();
  std::vector<char> seen(static_cast<size_t>(basis.node_count()), 0);
  std::deque<int> queue;
  u.setZero(basis.n);
  v.setZero(basis.l);
  queue.push_back(0);
  seen[0] = 1;
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    for (const auto& [next, cell] : adj[static_cast<size_t>(node)]) {
      if (seen[static_cast<size_t>(next)]) continue;
      seen[static_cast<size_t>(next)] = 1;
      const int i = cell / basis.l;
      const int j = cell % basis.l;
      if (next >= basis.n) {
        v(j) = cost(i, j) - u(i);
      } else {
        u(i) = cost(i, j) - v(j);
      }
      queue.push_back(next);
    }
  }
}

/// Tree path from the entering cell's row node to its column node.
std::vector<int> tree_path(const Basis& basis, int from, int to) {
  const auto adj = basis.adjacency();
  std::vector<int> parent(static_cast<size_t>(basis.node_count()), -1);
  std::vector<char> seen(static_cast<size_t>(basis.node_count()), 0);
  std::deque<int> queue{from};
  seen[static_cast<size_t>(from)] = 1;
  while (!queue.empty()) {
    const int node = queue.front();
    queue.pop_front();
    if (node == to) break;
    for (const auto& [next, cell] : adj[static_cast<size_t>(node)]) {
      (void)cell;
      if (!seen[static_cast<size_t>(next)]) {
        seen[static_cast<size_t>(next)] = 1;
        parent[static_cast<size_t>(next)] = node;
        queue.push_back(next);
      }
    }
  }
  std::vector<int> path;
  for (int node = to; node != -1; node = parent[static_cast<size_t>(node)]) {
    path.push_back(node);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

CostMatrix projection_cost(const EmpiricalMeasure& measure, const ClassMoments& moments) {
  measure.validate();
  if (moments.size() == 0) throw DimensionError("projection_cost: no classes");
  if (moments.lifted_dim() != measure.lifted_dim()) {
    throw DimensionError("projection_cost: lifted dimensions differ");
  }
  CostMatrix out;
  out.entries.resize(measure.size(), moments.size());
  out.column_labels.reserve(static_cast<size_t>(moments.size()));
  for (const auto& entry : moments.classes) out.column_labels.push_back(entry.label);
  for (int i = 0; i < measure.size(); ++i) {
    const Particle& z = measure.particles[static_cast<size_t>(i)];
    for (int y = 0; y < moments.size(); ++y) {
      const auto& cls = moments.classes[static_cast<size_t>(y)];
      const double b = bures_distance(z.sigma, cls.sigma);
      out.entries(i, y) = std::sqrt((z.mu - cls.mu).squaredNorm() + b * b);
    }
  }
  return out;
}

double TransportPlan::objective(const Matrix& cost) const {
  return theta.cwiseProduct(cost).sum();
}

TransportPlan solve_transportation(const Matrix& cost, const Vector& row_marginals,
                                   const Vector& col_marginals) {
  const int n = static_cast<int>(cost.rows());
  const int l = static_cast<int>(cost.cols());
  if (row_marginals.size() != n || col_marginals.size() != l) {
    throw DimensionError("solve_transportation: marginal sizes do not match the cost matrix");
  }
  if (row_marginals.minCoeff() < 0.0 || col_marginals.minCoeff() < 0.0) {
    throw InfeasibleMarginalsError("marginals must be nonnegative");
  }
  const double row_total = row_marginals.sum();
  const double col_total = col_marginals.sum();
  if (std::abs(row_total - col_total) > 1e-9) {
    throw InfeasibleMarginalsError("marginal sums differ by " +
                                   std::to_string(row_total - col_total));
  }

  TransportPlan plan;
  plan.theta = Matrix::Zero(n, l);
  if (row_total <= 0.0) return plan;

  // Rescale the columns so both sides balance exactly; the caller already
  // guaranteed agreement within 1e-9.
  Vector a = row_marginals;
  Vector b = col_marginals * (row_total / col_total);

  Basis basis;
  basis.n = n;
  basis.l = l;
  basis.basic.assign(static_cast<size_t>(n), std::vector<char>(static_cast<size_t>(l), 0));
  basis.flow = Matrix::Zero(n, l);

  // Northwest-corner start: a staircase of n + l - 1 basic cells.
  {
    Vector ra = a;
    Vector cb = b;
    int i = 0;
    int j = 0;
    for (int step = 0; step < n + l - 1; ++step) {
      const double t = std::min(ra(i), cb(j));
      basis.flow(i, j) = t;
      basis.basic[static_cast<size_t>(i)][static_cast<size_t>(j)] = 1;
      ra(i) -= t;
      cb(j) -= t;
      if (i == n - 1) {
        ++j;
      } else if (j == l - 1) {
        ++i;
      } else if (ra(i) <= cb(j)) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  Vector u(n);
  Vector v(l);
  const long max_pivots = 10000L * (n + l) + 1000L;
  for (long pivot = 0; pivot < max_pivots; ++pivot) {
    solve_potentials(basis, cost, u, v);

    // Bland: first row-major cell with negative reduced cost enters.
    int ei = -1;
    int ej = -1;
    for (int i = 0; i < n && ei < 0; ++i) {
      for (int j = 0; j < l; ++j) {
        if (basis.basic[static_cast<size_t>(i)][static_cast<size_t>(j)]) continue;
        if (cost(i, j) - u(i) - v(j) < -kPivotTol) {
          ei = i;
          ej = j;
          break;
        }
      }
    }
    if (ei < 0) {
      plan.theta = basis.flow;
      return plan;
    }

    const std::vector<int> path = tree_path(basis, ei, n + ej);
    // Signs around the cycle: entering cell +, then alternate starting with -
    // on the first path edge.
    double theta = std::numeric_limits<double>::infinity();
    int li = -1;
    int lj = -1;
    for (size_t t = 0; t + 1 < path.size(); t += 2) {
      // even edges carry the minus sign; nodes alternate row/col along the path
      const int node_a = path[t];
      const int node_b = path[t + 1];
      const int i = node_a < n ? node_a : node_b;
      const int j = (node_a < n ? node_b : node_a) - n;
      const double f = basis.flow(i, j);
      if (li < 0 || f < theta - kPivotTol) {
        theta = f;
        li = i;
        lj = j;
      } else if (f <= theta + kPivotTol && i * l + j < li * l + lj) {
        li = i;
        lj = j;
      }
    }

    std::vector<std::pair<int, int>> plus{{ei, ej}};
    std::vector<std::pair<int, int>> minus;
    for (size_t t = 0; t + 1 < path.size(); ++t) {
      const int node_a = path[t];
      const int node_b = path[t + 1];
      const int i = node_a < n ? node_a : node_b;
      const int j = (node_a < n ? node_b : node_a) - n;
      if (t % 2 == 0) {
        minus.emplace_back(i, j);
      } else {
        plus.emplace_back(i, j);
      }
    }
    for (const auto& [i, j] : plus) basis.flow(i, j) += theta;
    for (const auto& [i, j] : minus) basis.flow(i, j) -= theta;
    basis.flow(li, lj) = 0.0;
    basis.basic[static_cast<size_t>(li)][static_cast<size_t>(lj)] = 0;
    basis.basic[static_cast<size_t>(ei)][static_cast<size_t>(ej)] = 1;
  }
  throw std::runtime_error("solve_transportation: pivot limit exceeded");
}

std::vector<std::string> project_labels_lp(const EmpiricalMeasure& measure,
                                           const ClassMoments& moments) {
  const CostMatrix cost = projection_cost(measure, moments);
  const int count = measure.size();
  const int classes = moments.size();

  Vector row = Vector::Constant(count, 1.0 / count);
  Vector col(classes);
  double total = 0.0;
  for (int y = 0; y < classes; ++y) total += moments.classes[static_cast<size_t>(y)].count;
  for (int y = 0; y < classes; ++y) {
    col(y) = moments.classes[static_cast<size_t>(y)].count / total;
  }

  const TransportPlan plan = solve_transportation(cost.entries, row, col);

  std::vector<std::string> labels;
  labels.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    int best = 0;
    for (int y = 1; y < classes; ++y) {
      if (plan.theta(i, y) > plan.theta(i, best)) best = y;
    }
    labels.push_back(cost.column_labels[static_cast<size_t>(best)]);
  }
  return labels;
}

std::vector<std::string> project_labels_knn(const EmpiricalMeasure& measure,
                                            const EmpiricalMeasure& target, int k) {
  measure.validate();
  target.validate();
  if (!target.labeled()) throw std::invalid_argument("knn: target measure carries no labels");
  if (k < 1 || k > target.size()) throw std::invalid_argument("knn: k out of range");

  std::vector<std::string> distinct = target.labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  auto label_index = [&](const std::string& label) {
    return static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), label) -
                            distinct.begin());
  };

  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(measure.size()));
  for (const Particle& z : measure.particles) {
    std::vector<std::pair<double, int>> dist;
    dist.reserve(static_cast<size_t>(target.size()));
    for (int j = 0; j < target.size(); ++j) {
      dist.emplace_back(ground_distance(z, target.particles[static_cast<size_t>(j)]), j);
    }
    std::sort(dist.begin(), dist.end());

    std::vector<int> votes(distinct.size(), 0);
    std::vector<double> summed(distinct.size(), 0.0);
    for (int r = 0; r < k; ++r) {
      const int idx = label_index(target.labels[static_cast<size_t>(dist[static_cast<size_t>(r)].second)]);
      votes[static_cast<size_t>(idx)] += 1;
      summed[static_cast<size_t>(idx)] += dist[static_cast<size_t>(r)].first;
    }

    int best = -1;
    for (int c = 0; c < static_cast<int>(distinct.size()); ++c) {
      if (votes[static_cast<size_t>(c)] == 0) continue;
      if (best < 0 || votes[static_cast<size_t>(c)] > votes[static_cast<size_t>(best)] ||
          (votes[static_cast<size_t>(c)] == votes[static_cast<size_t>(best)] &&
           summed[static_cast<size_t>(c)] < summed[static_cast<size_t>(best)])) {
        best = c;
      }
    }
    out.push_back(distinct[static_cast<size_t>(best)]);
  }
  return out;
}

}  // namespace fgflow
