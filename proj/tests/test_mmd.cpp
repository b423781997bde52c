#include "fgflow/mmd.hpp"

#include "doctest.h"
#include "fgflow/flow.hpp"
#include "support/random_inputs.hpp"

#include <random>

using namespace fgflow;
using namespace fgflow::testing;

namespace {
const KernelParams kParams{0.5, 0.5, 0.8};

/// Independent double-loop recomputation of the V-statistic.
double mmd2_oracle(const KernelParams& p, const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  double self_a = 0.0;
  double cross = 0.0;
  double self_b = 0.0;
  for (const Particle& x : a.particles) {
    for (const Particle& y : a.particles) self_a += kernel_eval(p, x, y);
  }
  for (const Particle& x : a.particles) {
    for (const Particle& y : b.particles) cross += kernel_eval(p, x, y);
  }
  for (const Particle& x : b.particles) {
    for (const Particle& y : b.particles) self_b += kernel_eval(p, x, y);
  }
  const double n = a.size();
  const double m = b.size();
  return self_a / (n * n) - 2.0 * cross / (n * m) + self_b / (m * m);
}
}  // namespace

TEST_CASE("mmd_squared vanishes on identical measures") {
  std::mt19937_64 gen(41);
  const EmpiricalMeasure m = random_measure(gen, 8, 2, 2);
  CHECK(mmd_squared(kParams, m, m) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("mmd_squared of two singletons is 2(1-k)") {
  std::mt19937_64 gen(42);
  EmpiricalMeasure a;
  EmpiricalMeasure b;
  a.particles.push_back(random_particle(gen, 3, 2));
  b.particles.push_back(random_particle(gen, 3, 2));
  const double k = kernel_eval(kParams, a.particles[0], b.particles[0]);
  CHECK(mmd_squared(kParams, a, b) == doctest::Approx(2.0 * (1.0 - k)).epsilon(1e-14));
  CHECK(loss(kParams, a, b) == doctest::Approx(1.0 - k).epsilon(1e-14));
}

TEST_CASE("mmd_squared agrees with a double-loop oracle") {
  std::mt19937_64 gen(43);
  for (int trial = 0; trial < 10; ++trial) {
    const EmpiricalMeasure a = random_measure(gen, 6, 2, 2);
    const EmpiricalMeasure b = random_measure(gen, 9, 2, 2);
    const double lib = mmd_squared(kParams, a, b);
    CHECK(std::abs(lib - mmd2_oracle(kParams, a, b)) <= 1e-12);
    // symmetry under exchanging the measures
    CHECK(std::abs(lib - mmd_squared(kParams, b, a)) <= 1e-12);
    // the cached-target-term overload is the same function
    CHECK(mmd_squared(kParams, a, b, target_self_term(kParams, b)) == lib);
    // loss is exactly half
    CHECK(loss(kParams, a, b) == 0.5 * lib);
  }
}

TEST_CASE("mmd_squared is invariant under particle permutations") {
  std::mt19937_64 gen(44);
  const EmpiricalMeasure a = random_measure(gen, 7, 2, 2);
  const EmpiricalMeasure b = random_measure(gen, 5, 2, 2);
  EmpiricalMeasure shuffled = a;
  std::shuffle(shuffled.particles.begin(), shuffled.particles.end(), gen);
  CHECK(std::abs(mmd_squared(kParams, a, b) - mmd_squared(kParams, shuffled, b)) <= 1e-12);
  CHECK(std::abs(dissipation(kParams, a, b) - dissipation(kParams, shuffled, b)) <= 1e-12);
}

TEST_CASE("dissipation vanishes when the measures coincide") {
  std::mt19937_64 gen(45);
  const EmpiricalMeasure m = random_measure(gen, 6, 2, 2);
  CHECK(dissipation(kParams, m, m) == doctest::Approx(0.0).epsilon(1e-16));

  EmpiricalMeasure one;
  one.particles.push_back(random_particle(gen, 2, 2));
  CHECK(dissipation(kParams, one, one) == 0.0);

  // zero dissipation forces every per-particle field to vanish
  for (const Particle& z : m.particles) {
    const TangentVector g = witness_field(kParams, m, z) - witness_field(kParams, m, z);
    CHECK(tangent_norm(z, g) <= 1e-9);
  }
}

TEST_CASE("finite-difference loss slope matches the dissipation") {
  std::mt19937_64 gen(46);
  const EmpiricalMeasure rho = random_measure(gen, 6, 2, 2, 0.8);
  const EmpiricalMeasure target = random_measure(gen, 7, 2, 2, 0.8);
  const double diss = dissipation(kParams, rho, target);
  REQUIRE(diss > 1e-8);

  FlowConfig cfg;
  cfg.iterations = 1;
  for (const double s : {1e-3, 1e-4}) {
    FlowState st;
    st.measure = rho;
    const FlowState next = euler_step(st, kParams, target, s, cfg);
    const double slope = (loss(kParams, next.measure, target) - loss(kParams, rho, target)) / s;
    CHECK(slope / (-diss) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("mmd rejects empty measures") {
  std::mt19937_64 gen(47);
  const EmpiricalMeasure m = random_measure(gen, 3, 2, 2);
  const EmpiricalMeasure empty;
  CHECK_THROWS_AS(mmd_squared(kParams, empty, m), DimensionError);
  CHECK_THROWS_AS(dissipation(kParams, m, empty), DimensionError);
}
