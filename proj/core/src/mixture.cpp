#include "fgflow/mixture.hpp"

#include "fgflow/manifold.hpp"
#include "fgflow/mmd.hpp"
#include "fgflow/rng.hpp"
#include "fgflow/transport.hpp"

#include <Eigen/Cholesky>

namespace fgflow {

namespace {

// Sampling streams; flow iterations use the plain tau counter, so these stay
// out of its range.
constexpr std::uint64_t kSourceStream = 0x534f555243ull;
constexpr std::uint64_t kTargetStream = 0x544152474554ull;

GaussianComponent component(double mx, double my, double c00, double c01, double c11) {
  GaussianComponent g;
  g.mean = Vector(2);
  g.mean << mx, my;
  g.cov = Matrix(2, 2);
  g.cov << c00, c01, c01, c11;
  return g;
}

}  // namespace

MixtureSetup mixture_setup(MixtureScenario scenario) {
  MixtureSetup setup;
  switch (scenario) {
    case MixtureScenario::kFourToFour:
      setup.source = {
          component(2.0, -0.3, 0.14, 0.00, 0.22),
          component(2.0, 0.3, 0.43, 0.18, 0.26),
          component(-0.3, 2.0, 0.66, 0.02, 0.63),
          component(0.3, -2.0, 0.39, -0.02, 0.13),
      };
      setup.target = {
          component(2.9, 0.1, 0.16, 0.03, 0.20),
          component(0.9, 0.5, 0.22, 0.16, 0.46),
          component(0.8, 2.2, 0.63, 0.02, 0.66),
          component(1.4, -1.8, 0.18, 0.10, 0.36),
      };
      setup.kernel = {0.3, 0.15, 1.0};
      setup.flow.step_size = 0.05;
      setup.flow.step_schedule = StepSchedule::kHarmonic;
      setup.flow.step_tau0 = 100.0;
      setup.flow.noise_level = 0.0;
      setup.flow.iterations = 2000;
      setup.flow.rms_precondition = true;
      break;
    case MixtureScenario::kTwoToFour:
      setup.source = {
          component(0.0, 0.0, 0.18, -0.24, 0.70),
          component(5.8, 0.0, 0.44, 0.00, 0.87),
      };
      setup.target = {
          component(2.0, 0.7, 0.63, -0.30, 0.26),
          component(2.2, -0.8, 0.77, -0.18, 0.55),
          component(7.0, 0.8, 0.63, -0.30, 0.26),
          component(7.7, -0.8, 0.77, -0.18, 0.55),
      };
      setup.kernel = {0.3, 0.1, 0.5};
      setup.flow.step_size = 0.03;
      setup.flow.noise_level = 0.1;
      setup.flow.noise_schedule = NoiseSchedule::kInverseSqrt;
      setup.flow.iterations = 2500;
      setup.flow.rms_precondition = true;
      // the k-NN relabeling copes better with the noise-spread particles
      setup.knn_labels = true;
      setup.knn_k = 3;
      break;
  }
  return setup;
}

MixtureScenario parse_scenario(const std::string& name) {
  if (name == "four_to_four") return MixtureScenario::kFourToFour;
  if (name == "two_to_four") return MixtureScenario::kTwoToFour;
  throw std::invalid_argument("unknown scenario '" + name +
                              "' (expected four_to_four or two_to_four)");
}

std::string scenario_name(MixtureScenario scenario) {
  return scenario == MixtureScenario::kFourToFour ? "four_to_four" : "two_to_four";
}

EmpiricalMeasure sample_mixture(const std::vector<GaussianComponent>& components, int count,
                                std::uint64_t seed, std::uint64_t stream) {
  if (components.empty()) throw std::invalid_argument("mixture has no components");
  const int dim = static_cast<int>(components.front().mean.size());

  std::vector<Matrix> chol;
  chol.reserve(components.size());
  for (const GaussianComponent& g : components) {
    chol.push_back(Eigen::LLT<Matrix>(g.cov).matrixL());
  }

  EmpiricalMeasure measure;
  measure.particles.reserve(static_cast<size_t>(count));
  measure.labels.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    CounterRng rng(seed, stream, static_cast<std::uint64_t>(i));
    const auto c = static_cast<size_t>(rng.next_u64() % components.size());
    Vector xi(dim);
    for (int d = 0; d < dim; ++d) xi(d) = rng.normal();
    const GaussianComponent& g = components[c];
    measure.particles.push_back({g.mean + chol[c] * xi, g.mean, g.cov});
    measure.labels.push_back(std::to_string(c));
  }
  return measure;
}

ClassMoments component_moments(const std::vector<GaussianComponent>& components,
                               const EmpiricalMeasure& sampled) {
  ClassMoments moments;
  for (size_t c = 0; c < components.size(); ++c) {
    ClassMoments::Entry entry;
    entry.label = std::to_string(c);
    entry.mu = components[c].mean;
    entry.sigma = components[c].cov;
    entry.count = 0;
    for (const std::string& label : sampled.labels) {
      if (label == entry.label) ++entry.count;
    }
    moments.classes.push_back(std::move(entry));
  }
  return moments;
}

MixtureDemoResult run_mixture_demo(MixtureScenario scenario, std::uint64_t seed,
                                   const KernelParams* kernel_override,
                                   const FlowConfig* flow_override, int snapshot_every) {
  MixtureSetup setup = mixture_setup(scenario);
  const KernelParams kernel = kernel_override ? *kernel_override : setup.kernel;
  FlowConfig flow = flow_override ? *flow_override : setup.flow;
  flow.seed = seed;

  MixtureDemoResult result;
  result.source = sample_mixture(setup.source, setup.particles_per_measure, seed, kSourceStream);
  result.target = sample_mixture(setup.target, setup.particles_per_measure, seed, kTargetStream);
  result.target_moments = component_moments(setup.target, result.target);
  result.initial_mmd2 = mmd_squared(kernel, result.source, result.target);

  if (snapshot_every > 0) {
    result.snapshots.emplace_back(0, result.source);
  }
  FlowEngine engine(kernel, result.target, flow);
  if (snapshot_every > 0) {
    engine.set_observer([&](const FlowState& state, const TraceRow&) {
      if (state.tau % snapshot_every == 0 && state.tau < flow.iterations) {
        result.snapshots.emplace_back(state.tau, state.measure);
      }
    });
  }
  auto [flowed, trace] = engine.run(result.source);
  result.flowed = std::move(flowed);
  result.trace = std::move(trace);
  result.final_mmd2 = mmd_squared(kernel, result.flowed, result.target);
  result.projected_labels = setup.knn_labels
                                ? project_labels_knn(result.flowed, result.target, setup.knn_k)
                                : project_labels_lp(result.flowed, result.target_moments);
  return result;
}

}  // namespace fgflow
