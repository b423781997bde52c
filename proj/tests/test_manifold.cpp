#include "fgflow/manifold.hpp"

#include "doctest.h"
#include "support/random_inputs.hpp"

#include <random>

using namespace fgflow;
using namespace fgflow::testing;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("lyapunov_solve identity sigma halves the rhs") {
  std::mt19937_64 gen(11);
  const Matrix s = random_sym(gen, 4);
  const Matrix h = lyapunov_solve(Matrix::Identity(4, 4), s);
  CHECK((h - 0.5 * s).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("lyapunov_solve diagonal case") {
  Matrix sigma = mat2(1, 0, 0, 3);
  Matrix v = mat2(2, 4, 4, 6);
  const Matrix h = lyapunov_solve(sigma, v);
  // H_ij = v_ij / (lambda_i + lambda_j)
  CHECK((h - Matrix::Ones(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("lyapunov_solve residual oracle on random instances") {
  std::mt19937_64 gen(12);
  std::uniform_int_distribution<int> dim(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = dim(gen);
    const Matrix sigma = random_spd(gen, n);
    const Matrix v = random_sym(gen, n);
    const Matrix h = lyapunov_solve(sigma, v);
    const double residual = (h * sigma + sigma * h - v).norm();
    CHECK(residual <= 1e-10 * v.norm());
    CHECK(is_symmetric(h));
  }
}

TEST_CASE("lyapunov_solve rejects bad inputs") {
  CHECK_THROWS_AS(lyapunov_solve(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), DimensionError);
  CHECK_THROWS_AS(lyapunov_solve(-Matrix::Identity(2, 2), Matrix::Identity(2, 2)), NotSpdError);
  Matrix skew = mat2(0, 1, -1, 0);
  CHECK_THROWS_AS(lyapunov_solve(Matrix::Identity(2, 2), skew), NotSymmetricError);
}

TEST_CASE("spd_sqrt basics and squaring oracle") {
  CHECK((spd_sqrt(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm() < 1e-14);
  const Matrix r = spd_sqrt(mat2(4, 0, 0, 9));
  CHECK((r - mat2(2, 0, 0, 3)).norm() < 1e-12);

  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = random_spd(gen, 5);
    const Matrix root = spd_sqrt(a);
    CHECK((root * root - a).norm() <= 1e-10 * a.norm());
  }
  CHECK_THROWS_AS(spd_sqrt(-Matrix::Identity(2, 2)), NotSpdError);
}

TEST_CASE("bures_distance closed forms") {
  std::mt19937_64 gen(14);
  const Matrix s = random_spd(gen, 3);
  CHECK(bures_distance(s, s) == doctest::Approx(0.0).epsilon(1e-9));
  // commuting case: B^2 = sum (sqrt(a_i) - sqrt(b_i))^2
  CHECK(bures_distance(mat2(4, 0, 0, 9), Matrix::Identity(2, 2)) ==
        doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("bures metric axioms on random triples") {
  std::mt19937_64 gen(15);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 7);
    const Matrix a = random_spd(gen, n);
    const Matrix b = random_spd(gen, n);
    const Matrix c = random_spd(gen, n);
    const double ab = bures_distance(a, b);
    const double ba = bures_distance(b, a);
    const double ac = bures_distance(a, c);
    const double cb = bures_distance(c, b);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - ba) <= 1e-9);
    CHECK(ab <= ac + cb + 1e-9);           // triangle inequality
    CHECK(bures_distance(a, a) <= 1e-9);   // indiscernibles
    if ((a - b).norm() > 1e-6) CHECK(ab > 1e-9);
  }
}

TEST_CASE("bures_inner agrees across both formulas and is positive") {
  std::mt19937_64 gen(16);
  const Matrix id = Matrix::Identity(3, 3);
  const Matrix v1 = random_sym(gen, 3);
  const Matrix v2 = random_sym(gen, 3);
  CHECK(bures_inner(id, v1, v2) ==
        doctest::Approx(0.25 * (v1.cwiseProduct(v2)).sum()).epsilon(1e-12));
  CHECK(bures_inner(id, Matrix::Zero(3, 3), Matrix::Zero(3, 3)) == 0.0);

  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 5);
    const Matrix sigma = random_spd(gen, n);
    const Matrix a = random_sym(gen, n);
    const Matrix b = random_sym(gen, n);
    // independent route: tr(L[a] Sigma L[b])
    const Matrix la = lyapunov_solve(sigma, a);
    const Matrix lb = lyapunov_solve(sigma, b);
    const double direct = (la * sigma * lb).trace();
    const double lib = bures_inner(sigma, a, b);
    CHECK(std::abs(direct - lib) <= 1e-10 * std::max(1.0, std::abs(direct)));
    CHECK(bures_inner(sigma, a, a) >= 0.0);
  }
}

TEST_CASE("tangent_inner reductions") {
  std::mt19937_64 gen(17);
  const Particle z{random_vec(gen, 3), random_vec(gen, 2), Matrix::Identity(2, 2)};
  const TangentVector xi = random_tangent(gen, 3, 2);
  const TangentVector zero = TangentVector::zero(3, 2);
  CHECK(tangent_inner(z, xi, zero) == 0.0);
  CHECK(tangent_inner(z, xi, xi) ==
        doctest::Approx(xi.w.squaredNorm() + xi.v.squaredNorm() + 0.25 * xi.V.squaredNorm())
            .epsilon(1e-12));

  const Particle zr = random_particle(gen, 3, 2);
  const TangentVector eta = random_tangent(gen, 3, 2);
  CHECK(std::abs(tangent_inner(zr, xi, eta) - tangent_inner(zr, eta, xi)) <= 1e-12);
}

TEST_CASE("tangent_norm scaling and consistency") {
  std::mt19937_64 gen(18);
  const Particle z = random_particle(gen, 3, 3);
  const TangentVector xi = random_tangent(gen, 3, 3);
  CHECK(tangent_norm(z, TangentVector::zero(3, 3)) == 0.0);
  const double n1 = tangent_norm(z, xi);
  CHECK(tangent_norm(z, xi * -2.5) == doctest::Approx(2.5 * n1).epsilon(1e-10));
  CHECK(n1 == doctest::Approx(std::sqrt(tangent_inner(z, xi, xi))).epsilon(1e-12));
}

TEST_CASE("ground_distance reductions and symmetry") {
  std::mt19937_64 gen(19);
  const Particle z = random_particle(gen, 4, 2);
  CHECK(ground_distance(z, z) == doctest::Approx(0.0).epsilon(1e-9));

  Particle z2 = random_particle(gen, 4, 2);
  z2.sigma = z.sigma;
  const double flat = std::sqrt((z.x - z2.x).squaredNorm() + (z.mu - z2.mu).squaredNorm());
  CHECK(ground_distance(z, z2) == doctest::Approx(flat).epsilon(1e-10));

  for (int trial = 0; trial < 20; ++trial) {
    const Particle a = random_particle(gen, 3, 3);
    const Particle b = random_particle(gen, 3, 3);
    CHECK(ground_distance(a, b) == doctest::Approx(ground_distance(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("exp_map fixed points and the closed-form covariance leg") {
  std::mt19937_64 gen(20);
  const Particle z = random_particle(gen, 3, 2);
  const TangentVector xi = random_tangent(gen, 3, 2);
  const Particle same = exp_map(z, xi, 0.0);
  CHECK(same.x == z.x);
  CHECK(same.mu == z.mu);
  CHECK(same.sigma == z.sigma);

  // Sigma = I, V = 2I, t = 1/2: L_I[2I] = I, so Sigma' = (1.5 I) I (1.5 I)
  const Particle unit{Vector::Zero(2), Vector::Zero(2), Matrix::Identity(2, 2)};
  const TangentVector dir{Vector::Zero(2), Vector::Zero(2), 2.0 * Matrix::Identity(2, 2)};
  const Particle moved = exp_map(unit, dir, 0.5);
  CHECK((moved.sigma - 2.25 * Matrix::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("exp_map geodesics have constant speed") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Particle z = random_particle(gen, 2, 3);
    TangentVector xi = random_tangent(gen, 2, 3, 0.4);

    // stay well inside J*
    const double t_max = 0.5;
    REQUIRE(exp_map_feasible(z, xi, t_max).feasible);

    const double h = 1e-5;
    double reference = -1.0;
    for (int k = 0; k < 20; ++k) {
      const double t = t_max * (k + 1) / 21.0;
      const Particle at = exp_map(z, xi, t);
      const Particle fwd = exp_map(z, xi, t + h);
      const Particle bwd = exp_map(z, xi, t - h);
      const TangentVector vel{(fwd.x - bwd.x) / (2 * h), (fwd.mu - bwd.mu) / (2 * h),
                              (fwd.sigma - bwd.sigma) / (2 * h)};
      const double speed = tangent_norm(at, vel);
      if (reference < 0.0) {
        reference = speed;
      } else {
        CHECK(std::abs(speed - reference) <= 1e-6 * reference);
      }
    }
  }
}

TEST_CASE("exp_map_feasible matches direct eigenvalues and gates exp_map") {
  const Particle unit{Vector::Zero(1), Vector::Zero(2), Matrix::Identity(2, 2)};
  const TangentVector shrink{Vector::Zero(1), Vector::Zero(2), -4.0 * Matrix::Identity(2, 2)};
  auto fs = exp_map_feasible(unit, shrink, 0.0);
  CHECK(fs.feasible);
  CHECK(fs.margin == doctest::Approx(1.0));

  fs = exp_map_feasible(unit, shrink, 1.0);  // I + L_I[-4I] = -I
  CHECK_FALSE(fs.feasible);
  CHECK(fs.margin == doctest::Approx(-1.0));
  CHECK_THROWS_AS(exp_map(unit, shrink, 1.0), InfeasibleStepError);

  std::mt19937_64 gen(22);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 4);
    const Particle z{random_vec(gen, 2), random_vec(gen, n), random_spd(gen, n)};
    const TangentVector xi = random_tangent(gen, 2, n);
    const double t = std::uniform_real_distribution<double>(-1.0, 1.0)(gen);
    const Matrix l = lyapunov_solve(z.sigma, xi.V);
    const double direct = min_eigenvalue(Matrix::Identity(n, n) + t * l);
    const auto got = exp_map_feasible(z, xi, t);
    CHECK(got.margin == doctest::Approx(direct).epsilon(1e-12));
    CHECK(got.feasible == (direct > kSpdFloor));
  }
}

TEST_CASE("exp_map output covariance stays symmetric positive definite") {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 40; ++trial) {
    const Particle z = random_particle(gen, 2, 3);
    const TangentVector xi = random_tangent(gen, 2, 3);
    const double t = std::uniform_real_distribution<double>(0.0, 0.5)(gen);
    if (!exp_map_feasible(z, xi, t).feasible) continue;
    const Particle out = exp_map(z, xi, t);
    CHECK(is_symmetric(out.sigma));
    CHECK(min_eigenvalue(out.sigma) >= kSpdFloor);
  }
}

TEST_CASE("riemannian_lift closed form and duality") {
  std::mt19937_64 gen(24);
  const Particle z = random_particle(gen, 3, 3);

  // phi(z) = tr(Sigma): G = I lifts to 4 Sigma
  const TangentVector lift =
      riemannian_lift(z, {Vector::Zero(3), Vector::Zero(3), Matrix::Identity(3, 3)});
  CHECK((lift.V - 4.0 * z.sigma).norm() < 1e-12);

  const TangentVector zero =
      riemannian_lift(z, {Vector::Zero(3), Vector::Zero(3), Matrix::Zero(3, 3)});
  CHECK(zero.w.norm() == 0.0);
  CHECK(zero.V.norm() == 0.0);

  for (int trial = 0; trial < 40; ++trial) {
    const EuclideanGrad g{random_vec(gen, 3), random_vec(gen, 3), random_sym(gen, 3)};
    const TangentVector lifted = riemannian_lift(z, g);
    const TangentVector xi = random_tangent(gen, 3, 3);
    // duality: <lift, xi>_z equals the Euclidean pairing
    const double riemannian = tangent_inner(z, lifted, xi);
    const double euclidean = g.x.dot(xi.w) + g.mu.dot(xi.v) + (g.sigma.cwiseProduct(xi.V)).sum();
    CHECK(std::abs(riemannian - euclidean) <= 1e-10 * std::max(1.0, std::abs(euclidean)));
    // covariance leg alone: <lift_V, V>_Sigma = <G, V>_F
    CHECK(std::abs(bures_inner(z.sigma, lifted.V, xi.V) -
                   (g.sigma.cwiseProduct(xi.V)).sum()) <= 1e-10 *
              std::max(1.0, xi.V.norm() * g.sigma.norm()));
  }
}

TEST_CASE("directional derivatives along geodesics match the lifted gradient") {
  // phi(z) = <b,x> + <c,mu> + tr(A Sigma) has exact Euclidean gradient (b,c,A)
  std::mt19937_64 gen(25);
  const Particle z = random_particle(gen, 3, 2);
  const Vector b = random_vec(gen, 3);
  const Vector c = random_vec(gen, 2);
  const Matrix a = random_sym(gen, 2);
  const auto phi = [&](const Particle& p) {
    return b.dot(p.x) + c.dot(p.mu) + (a.cwiseProduct(p.sigma)).sum();
  };
  const TangentVector lifted = riemannian_lift(z, {b, c, a});

  const TangentVector xi = random_tangent(gen, 3, 2, 0.5);
  const double expected = tangent_inner(z, lifted, xi);
  double prev_err = std::numeric_limits<double>::infinity();
  for (const double h : {1e-3, 1e-4, 1e-5}) {
    const double fd = (phi(exp_map(z, xi, h)) - phi(z)) / h;
    const double err = std::abs(fd - expected);
    CHECK(err < prev_err);  // first-order convergence
    prev_err = err;
  }
  CHECK(prev_err <= 1e-4 * std::max(1.0, std::abs(expected)));
}

TEST_CASE("spd_regularize clamps eigenvalues") {
  std::mt19937_64 gen(26);
  const Matrix good = random_spd(gen, 3, 0.5, 2.0);
  CHECK((spd_regularize(good, 1e-6) - good).norm() <= 1e-12 * good.norm());

  const Matrix zero = spd_regularize(Matrix::Zero(3, 3), 1e-4);
  CHECK((zero - 1e-4 * Matrix::Identity(3, 3)).norm() < 1e-16);

  for (int trial = 0; trial < 30; ++trial) {
    const Matrix any = random_sym(gen, 4);
    CHECK(min_eigenvalue(spd_regularize(any, 1e-6)) >= 1e-6 - 1e-15);
  }
}

TEST_CASE("measure validation catches structural problems") {
  EmpiricalMeasure empty;
  CHECK_THROWS_AS(empty.validate(), DimensionError);

  std::mt19937_64 gen(27);
  EmpiricalMeasure mixed;
  mixed.particles.push_back(random_particle(gen, 2, 2));
  mixed.particles.push_back(random_particle(gen, 3, 2));
  CHECK_THROWS_AS(mixed.validate(), DimensionError);

  EmpiricalMeasure bad_sigma;
  Particle p = random_particle(gen, 2, 2);
  p.sigma = -Matrix::Identity(2, 2);
  bad_sigma.particles.push_back(p);
  CHECK_THROWS_AS(bad_sigma.validate(), NotSpdError);
}
