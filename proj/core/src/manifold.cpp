#include "fgflow/manifold.hpp"

#include <cmath>

namespace fgflow {

namespace {

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(what) + " is not square");
  }
}

void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": dimension mismatch");
  }
}

}  // namespace

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

void require_symmetric(const Matrix& a, const char* what) {
  require_square(a, what);
  if (!is_symmetric(a)) {
    throw NotSymmetricError(std::string(what) + " is not symmetric");
  }
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_spd(const Matrix& a, const char* what, double spd_floor) {
  require_symmetric(a, what);
  const double lo = min_eigenvalue(a);
  if (lo < spd_floor) {
    throw NotSpdError(std::string(what) + " is not positive definite (min eigenvalue " +
                      std::to_string(lo) + ")");
  }
}

Matrix spd_regularize(const Matrix& a, double eps) {
  require_symmetric(a, "spd_regularize input");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  Vector lam = es.eigenvalues().cwiseMax(eps);
  return symmetrize(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
}

Matrix lyapunov_solve(const Matrix& sigma, const Matrix& v, double spd_floor) {
  require_symmetric(v, "lyapunov rhs");
  require_symmetric(sigma, "lyapunov sigma");
  require_same_dim(sigma, v, "lyapunov_solve");

  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  const Vector& lam = es.eigenvalues();
  if (lam.minCoeff() < spd_floor) {
    throw NotSpdError("lyapunov sigma is not positive definite (min eigenvalue " +
                      std::to_string(lam.minCoeff()) + ")");
  }
  const Matrix& q = es.eigenvectors();
  Matrix b = q.transpose() * v * q;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      b(i, j) /= lam(i) + lam(j);
    }
  }
  return symmetrize(q * b * q.transpose());
}

Matrix spd_sqrt(const Matrix& sigma, double spd_floor) {
  require_symmetric(sigma, "spd_sqrt input");
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  if (es.eigenvalues().minCoeff() < spd_floor) {
    throw NotSpdError("spd_sqrt input is not positive definite");
  }
  Vector root = es.eigenvalues().cwiseSqrt();
  return symmetrize(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose());
}

double bures_distance(const Matrix& sigma1, const Matrix& sigma2, double spd_floor) {
  require_same_dim(sigma1, sigma2, "bures_distance");
  require_spd(sigma1, "bures sigma1", spd_floor);
  require_spd(sigma2, "bures sigma2", spd_floor);

  const Matrix r = spd_sqrt(sigma1, spd_floor);
  // tr[(S1^{1/2} S2 S1^{1/2})^{1/2}] is the sum of the square roots of the
  // eigenvalues of the (PSD) congruence r S2 r.
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(r * sigma2 * r), Eigen::EigenvaluesOnly);
  double cross = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    cross += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  }
  double b2 = sigma1.trace() + sigma2.trace() - 2.0 * cross;
  if (b2 < 0.0) {
    if (b2 < -1e-12) {
      throw NotSpdError("bures_distance trace argument " + std::to_string(b2) +
                        " below roundoff tolerance");
    }
    b2 = 0.0;
  }
  return std::sqrt(b2);
}

double bures_inner(const Matrix& sigma, const Matrix& v1, const Matrix& v2, double spd_floor) {
  require_same_dim(v1, v2, "bures_inner");
  // tr(L[V1] Sigma L[V2]) and tr(L[V1] V2)/2 agree exactly; the latter needs
  // a single Lyapunov solve.
  return 0.5 * (lyapunov_solve(sigma, v1, spd_floor).cwiseProduct(v2)).sum();
}

double tangent_inner(const Particle& z, const TangentVector& xi1, const TangentVector& xi2) {
  if (xi1.w.size() != xi2.w.size() || xi1.v.size() != xi2.v.size() ||
      xi1.w.size() != z.x.size() || xi1.v.size() != z.mu.size()) {
    throw DimensionError("tangent_inner: dimension mismatch");
  }
  return xi1.w.dot(xi2.w) + xi1.v.dot(xi2.v) + bures_inner(z.sigma, xi1.V, xi2.V);
}

double tangent_norm(const Particle& z, const TangentVector& xi) {
  return std::sqrt(std::max(0.0, tangent_inner(z, xi, xi)));
}

double ground_distance(const Particle& z1, const Particle& z2) {
  if (z1.feature_dim() != z2.feature_dim() || z1.lifted_dim() != z2.lifted_dim()) {
    throw DimensionError("ground_distance: dimension mismatch");
  }
  const double b = bures_distance(z1.sigma, z2.sigma);
  return std::sqrt((z1.x - z2.x).squaredNorm() + (z1.mu - z2.mu).squaredNorm() + b * b);
}

Feasibility exp_map_feasible(const Particle& z, const TangentVector& xi, double t,
                             double spd_floor) {
  const Eigen::Index n = z.sigma.rows();
  const Matrix h = lyapunov_solve(z.sigma, xi.V, spd_floor);
  const double margin = min_eigenvalue(Matrix::Identity(n, n) + t * h);
  return {margin > spd_floor, margin};
}

Particle exp_map(const Particle& z, const TangentVector& xi, double t, double spd_floor) {
  if (t == 0.0) return z;
  const Eigen::Index n = z.sigma.rows();
  const Matrix h = lyapunov_solve(z.sigma, xi.V, spd_floor);
  const Matrix a = Matrix::Identity(n, n) + t * h;
  if (min_eigenvalue(a) <= spd_floor) {
    throw InfeasibleStepError("exp_map: step leaves the SPD cone (t = " + std::to_string(t) + ")");
  }
  Particle out{z.x + t * xi.w, z.mu + t * xi.v, symmetrize(a * z.sigma * a)};
  if (min_eigenvalue(out.sigma) < spd_floor) {
    throw InfeasibleStepError("exp_map: output covariance fell below the SPD floor");
  }
  return out;
}

TangentVector riemannian_lift(const Particle& z, const EuclideanGrad& grad) {
  if (grad.x.size() != z.x.size() || grad.mu.size() != z.mu.size() ||
      grad.sigma.rows() != z.sigma.rows()) {
    throw DimensionError("riemannian_lift: dimension mismatch");
  }
  require_symmetric(grad.sigma, "riemannian_lift sigma gradient");
  Matrix lifted = 2.0 * grad.sigma * z.sigma + 2.0 * z.sigma * grad.sigma;
  return {grad.x, grad.mu, symmetrize(lifted)};
}

void EmpiricalMeasure::validate(double spd_floor) const {
  if (particles.empty()) {
    throw DimensionError("empirical measure is empty");
  }
  if (!labels.empty() && labels.size() != particles.size()) {
    throw DimensionError("label list does not match particle count");
  }
  const int m = particles.front().feature_dim();
  const int n = particles.front().lifted_dim();
  for (const Particle& p : particles) {
    if (p.feature_dim() != m || p.lifted_dim() != n || p.sigma.rows() != n ||
        p.sigma.cols() != n) {
      throw DimensionError("particles do not share (m, n)");
    }
    require_spd(p.sigma, "particle covariance", spd_floor);
  }
}

}  // namespace fgflow
