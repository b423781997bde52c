#pragma once

#include "fgflow/kernel.hpp"
#include "fgflow/mmd.hpp"
#include "fgflow/rng.hpp"
#include "fgflow/types.hpp"

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

namespace fgflow {

enum class StepSchedule {
  kConstant,  // s_tau = s0
  kHarmonic,  // s_tau = s0 / (1 + tau/tau0)
};

enum class NoiseSchedule {
  kConstant,     // beta_tau = noise_level
  kInverseSqrt,  // beta_tau = noise_level / sqrt(max(tau,1) * s_tau)
};

struct FlowConfig {
  double step_size = 0.05;  // s0
  StepSchedule step_schedule = StepSchedule::kConstant;
  double step_tau0 = 1.0;
  double noise_level = 0.0;
  NoiseSchedule noise_schedule = NoiseSchedule::kConstant;
  int iterations = 1;  // T
  double safeguard_backoff = 0.5;
  int max_safeguard_retries = 30;
  std::uint64_t seed = 0;
  bool rms_precondition = false;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  bool noise_diagnostic = false;
  int workers = 1;

  void validate() const;
  double step_at(int tau) const;
  double noise_at(int tau) const;
};

/// Tangent draw from the noise measure g: w and v standard normal, V
/// symmetric with i.i.d. standard normal upper triangle (diagonal included)
/// mirrored below. Draw order is w, v, then V in row-major upper triangle.
TangentVector sample_tangent_noise(CounterRng& rng, int m, int n);

/// Running second moments for the optional RMS preconditioner, one per
/// particle and per tangent coordinate. Accumulators start at 1 so the first
/// steps stay close to plain gradient steps instead of jumping to
/// sign-magnitude updates.
struct RmsAccumulator {
  Vector w;
  Vector v;
  Matrix V;

  static RmsAccumulator unit(int m, int n) {
    return {Vector::Ones(m), Vector::Ones(n), Matrix::Ones(n, n)};
  }
};

/// acc <- decay * acc + (1-decay) * g^2 per coordinate, then each coordinate
/// of g is divided by sqrt(acc) + epsilon. The V part is re-symmetrized
/// after scaling. Applied before the exponential map when enabled.
TangentVector precondition(RmsAccumulator& acc, const TangentVector& g, double decay,
                           double epsilon);

struct FlowState {
  int tau = 0;
  EmpiricalMeasure measure;
  std::uint64_t seed = 0;
  std::vector<RmsAccumulator> rms;  // populated only when preconditioning
};

/// One row per completed iteration. The mmd2/dissipation columns describe the
/// measure the iteration stepped FROM; step, noise and retries describe what
/// the iteration actually applied (minimum effective values across particles,
/// total retries).
struct TraceRow {
  int tau = 0;
  double mmd2 = 0.0;
  double dissipation = 0.0;
  double step = 0.0;
  double noise = 0.0;
  int retries = 0;
  double ms = 0.0;
};

struct FlowTrace {
  std::vector<TraceRow> rows;
  /// Per-row value of mean |Phi|^2 over the perturbed particles divided by
  /// beta^2 F[rho]; populated when FlowConfig::noise_diagnostic is set and
  /// the row was a noisy step. NaN rows mark noiseless iterations.
  std::vector<double> noise_ratio;

  static constexpr const char* kCsvHeader = "tau,mmd2,dissipation,step,noise,retries,ms";
};

void write_trace_row_csv(std::ostream& os, const TraceRow& row);
void write_trace_csv(std::ostream& os, const FlowTrace& trace);

/// Phi(z) = witness(target, z) - witness(rho, z), the steepest-descent
/// direction of the loss at z.
TangentVector descent_direction(const KernelParams& p, const EmpiricalMeasure& rho,
                                const EmpiricalMeasure& target, const Particle& z);

/// Drives the discretized flow. All particle updates within one step read the
/// frozen tau-state; updates are independent and may run on several workers.
class FlowEngine {
 public:
  using StepObserver = std::function<void(const FlowState&, const TraceRow&)>;

  FlowEngine(KernelParams params, EmpiricalMeasure target, FlowConfig config);

  /// Noiseless forward Euler step from the frozen state; appends a trace row.
  void euler_step(FlowState& state, double s);

  /// Perturb each particle by exp_z(beta u), then step from the perturbed
  /// point along the descent direction evaluated there, with witness fields
  /// built from the unperturbed tau-measure.
  void noisy_step(FlowState& state, double s, double beta);

  /// Applies config.iterations steps (noisy when beta_tau > 0), returning the
  /// final measure and the full trace.
  std::pair<EmpiricalMeasure, FlowTrace> run(const EmpiricalMeasure& rho0);

  FlowState make_state(const EmpiricalMeasure& rho0) const;
  void set_observer(StepObserver observer) { observer_ = std::move(observer); }
  const FlowTrace& trace() const { return trace_; }

 private:
  void step(FlowState& state, double s, double beta, bool noisy);

  KernelParams params_;
  EmpiricalMeasure target_;
  FlowConfig config_;
  double target_term_ = 0.0;  // iteration-invariant |m_target|^2 block
  FlowTrace trace_;
  StepObserver observer_;
};

std::pair<EmpiricalMeasure, FlowTrace> run_flow(const EmpiricalMeasure& rho0,
                                                const EmpiricalMeasure& target,
                                                const KernelParams& p, const FlowConfig& config,
                                                FlowEngine::StepObserver observer = {});

/// Single-step conveniences used by tests; each builds a transient engine.
FlowState euler_step(const FlowState& state, const KernelParams& p,
                     const EmpiricalMeasure& target, double s, const FlowConfig& config,
                     TraceRow* row = nullptr);
FlowState noisy_step(const FlowState& state, const KernelParams& p,
                     const EmpiricalMeasure& target, double s, double beta,
                     const FlowConfig& config, TraceRow* row = nullptr);

}  // namespace fgflow
