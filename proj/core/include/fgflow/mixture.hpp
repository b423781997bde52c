#pragma once

#include "fgflow/flow.hpp"
#include "fgflow/kernel.hpp"
#include "fgflow/lifting.hpp"
#include "fgflow/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fgflow {

/// Bundled synthetic experiments: flow a 4-component Gaussian mixture onto
/// another one, or split a 2-component mixture onto 4 target components.
enum class MixtureScenario { kFourToFour, kTwoToFour };

struct GaussianComponent {
  Vector mean;
  Matrix cov;
};

struct MixtureSetup {
  std::vector<GaussianComponent> source;
  std::vector<GaussianComponent> target;
  KernelParams kernel;
  FlowConfig flow;
  int particles_per_measure = 25;
  bool knn_labels = false;  // assignment LP otherwise
  int knn_k = 3;
};

MixtureSetup mixture_setup(MixtureScenario scenario);
MixtureScenario parse_scenario(const std::string& name);
std::string scenario_name(MixtureScenario scenario);

/// Draws `count` particles from the mixture: a uniformly random component
/// index (kept as the label) and a Gaussian feature sample; the lifted legs
/// are the component's exact mean and covariance.
EmpiricalMeasure sample_mixture(const std::vector<GaussianComponent>& components, int count,
                                std::uint64_t seed, std::uint64_t stream);

/// Component moments with counts taken from a sampled measure's labels.
ClassMoments component_moments(const std::vector<GaussianComponent>& components,
                               const EmpiricalMeasure& sampled);

struct MixtureDemoResult {
  EmpiricalMeasure source;
  EmpiricalMeasure target;
  EmpiricalMeasure flowed;
  FlowTrace trace;
  std::vector<std::pair<int, EmpiricalMeasure>> snapshots;  // (tau, measure)
  std::vector<std::string> projected_labels;
  ClassMoments target_moments;
  double initial_mmd2 = 0.0;
  double final_mmd2 = 0.0;
};

/// Full pipeline: sample both mixtures, run the flow, project labels via the
/// assignment LP. Snapshots of the evolving measure are kept every
/// `snapshot_every` iterations (0 disables them).
MixtureDemoResult run_mixture_demo(MixtureScenario scenario, std::uint64_t seed,
                                   const KernelParams* kernel_override = nullptr,
                                   const FlowConfig* flow_override = nullptr,
                                   int snapshot_every = 100);

}  // namespace fgflow
