#pragma once

#include "fgflow/types.hpp"

namespace fgflow {

// ---------------------------------------------------------------------------
// Symmetric / SPD validation helpers
// ---------------------------------------------------------------------------

bool is_symmetric(const Matrix& a, double tol = kSymTol);
void require_symmetric(const Matrix& a, const char* what = "matrix");

/// (A + A^T) / 2. Applied after every covariance update to undo
/// floating-point drift.
Matrix symmetrize(const Matrix& a);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& a);

void require_spd(const Matrix& a, const char* what = "matrix", double spd_floor = kSpdFloor);

/// Eigenvalue clamp: eigenvalues below eps are raised to eps.
Matrix spd_regularize(const Matrix& a, double eps);

// ---------------------------------------------------------------------------
// Bures geometry of S^n_++
// ---------------------------------------------------------------------------

/// Solves H Sigma + Sigma H = V for the unique symmetric H, via the
/// eigendecomposition Sigma = Q diag(lambda) Q^T and
/// H = Q [ (Q^T V Q)_ij / (lambda_i + lambda_j) ] Q^T.
Matrix lyapunov_solve(const Matrix& sigma, const Matrix& v, double spd_floor = kSpdFloor);

/// Symmetric positive-definite square root, eigenvalue based.
Matrix spd_sqrt(const Matrix& sigma, double spd_floor = kSpdFloor);

/// Bures distance [ tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2}) ]^{1/2}.
/// Trace arguments in [-1e-12, 0) are clamped to 0; anything more negative
/// signals corrupted input and raises NotSpdError.
double bures_distance(const Matrix& sigma1, const Matrix& sigma2, double spd_floor = kSpdFloor);

/// Riemannian inner product of two symmetric tangents at Sigma,
/// <V1, V2>_Sigma = tr(L[V1] Sigma L[V2]) = tr(L[V1] V2) / 2.
double bures_inner(const Matrix& sigma, const Matrix& v1, const Matrix& v2,
                   double spd_floor = kSpdFloor);

// ---------------------------------------------------------------------------
// Geometry of Z = R^m x R^n x S^n_++
// ---------------------------------------------------------------------------

/// <w1,w2> + <v1,v2> + <V1,V2>_Sigma.
double tangent_inner(const Particle& z, const TangentVector& xi1, const TangentVector& xi2);

double tangent_norm(const Particle& z, const TangentVector& xi);

/// Product ground metric [ |x1-x2|^2 + |mu1-mu2|^2 + B(S1,S2)^2 ]^{1/2}.
double ground_distance(const Particle& z1, const Particle& z2);

/// True iff the covariance geodesic factor I + t L_Sigma[V] stays SPD;
/// margin is its smallest eigenvalue.
struct Feasibility {
  bool feasible = false;
  double margin = 0.0;
};
Feasibility exp_map_feasible(const Particle& z, const TangentVector& xi, double t,
                             double spd_floor = kSpdFloor);

/// Geodesic step exp_z(t xi) = (x + t w, mu + t v, A Sigma A) with
/// A = I + t L_Sigma[V]. The covariance output is re-symmetrized and
/// validated SPD. Throws InfeasibleStepError outside J*; never projects.
Particle exp_map(const Particle& z, const TangentVector& xi, double t,
                 double spd_floor = kSpdFloor);

/// Euclidean gradient components of a scalar function on Z.
struct EuclideanGrad {
  Vector x;
  Vector mu;
  Matrix sigma;  // must be symmetric
};

/// Lifts a Euclidean gradient to the Riemannian one:
/// (g_x, g_mu, 2 G Sigma + 2 Sigma G) with G = g_sigma.
TangentVector riemannian_lift(const Particle& z, const EuclideanGrad& grad);

}  // namespace fgflow
