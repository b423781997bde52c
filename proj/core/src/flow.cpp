#include "fgflow/flow.hpp"

#include "fgflow/format.hpp"
#include "fgflow/manifold.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

namespace fgflow {

namespace {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions are
/// stored per index; the lowest-index one is rethrown so failures are
/// independent of thread scheduling.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    const int lo = static_cast<int>(static_cast<long long>(n) * t / workers);
    const int hi = static_cast<int>(static_cast<long long>(n) * (t + 1) / workers);
    pool.emplace_back([&, lo, hi] {
      for (int i = lo; i < hi; ++i) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

struct BackoffResult {
  Particle z;
  double t_eff = 0.0;
  int retries = 0;
};

/// A geodesic factor I + t L[V] whose smallest eigenvalue is merely above the
/// SPD floor multiplies the covariance's smallest eigenvalue by roughly the
/// squared margin, stranding the particle on the boundary where every later
/// step is infeasible. The backoff therefore keeps shrinking until the factor
/// clears this margin, not just the floor.
constexpr double kMinGeodesicMargin = 0.5;

/// Applies exp_map(z, xi, t) with the factor t reduced by `backoff` until the
/// step is feasible with a healthy margin. Infeasible steps are never
/// projected.
BackoffResult safeguarded_exp(const Particle& z, const TangentVector& xi, double t,
                              double backoff, int max_retries, int tau, int particle) {
  double t_eff = t;
  for (int r = 0; r <= max_retries; ++r) {
    const Feasibility feas = exp_map_feasible(z, xi, t_eff);
    if (feas.feasible && feas.margin >= kMinGeodesicMargin) {
      try {
        return {exp_map(z, xi, t_eff), t_eff, r};
      } catch (const InfeasibleStepError&) {
        // output covariance fell below the floor; keep backing off
      }
    }
    t_eff *= backoff;
  }
  throw SafeguardExhaustedError("step safeguard exhausted after " +
                                    std::to_string(max_retries) + " retries (tau " +
                                    std::to_string(tau) + ", particle " +
                                    std::to_string(particle) + ")",
                                tau, particle);
}

}  // namespace

void FlowConfig::validate() const {
  if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
  if (!(step_tau0 > 0.0)) throw std::invalid_argument("step_tau0 must be positive");
  if (noise_level < 0.0) throw std::invalid_argument("noise_level must be nonnegative");
  if (iterations < 0) throw std::invalid_argument("iterations must be nonnegative");
  if (!(safeguard_backoff > 0.0 && safeguard_backoff < 1.0)) {
    throw std::invalid_argument("safeguard_backoff must be in (0,1)");
  }
  if (max_safeguard_retries < 0) throw std::invalid_argument("max_safeguard_retries < 0");
  if (!(rms_decay > 0.0 && rms_decay < 1.0)) {
    throw std::invalid_argument("rms_decay must be in (0,1)");
  }
  if (!(rms_epsilon > 0.0)) throw std::invalid_argument("rms_epsilon must be positive");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
}

double FlowConfig::step_at(int tau) const {
  switch (step_schedule) {
    case StepSchedule::kConstant:
      return step_size;
    case StepSchedule::kHarmonic:
      return step_size / (1.0 + static_cast<double>(tau) / step_tau0);
  }
  return step_size;
}

double FlowConfig::noise_at(int tau) const {
  switch (noise_schedule) {
    case NoiseSchedule::kConstant:
      return noise_level;
    case NoiseSchedule::kInverseSqrt: {
      // (tau s_tau)^{-1/2} shape anchored so the first iteration uses
      // noise_level itself; tau = 0 reuses tau = 1 to stay finite.
      const int t = std::max(tau, 1);
      const double anchor = std::sqrt(step_at(1));
      return noise_level * anchor / std::sqrt(static_cast<double>(t) * step_at(tau));
    }
  }
  return noise_level;
}

TangentVector sample_tangent_noise(CounterRng& rng, int m, int n) {
  TangentVector out = TangentVector::zero(m, n);
  for (int i = 0; i < m; ++i) out.w(i) = rng.normal();
  for (int i = 0; i < n; ++i) out.v(i) = rng.normal();
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double g = rng.normal();
      out.V(i, j) = g;
      out.V(j, i) = g;
    }
  }
  return out;
}

TangentVector precondition(RmsAccumulator& acc, const TangentVector& g, double decay,
                           double epsilon) {
  acc.w = decay * acc.w + (1.0 - decay) * g.w.cwiseProduct(g.w);
  acc.v = decay * acc.v + (1.0 - decay) * g.v.cwiseProduct(g.v);
  acc.V = decay * acc.V + (1.0 - decay) * g.V.cwiseProduct(g.V);
  TangentVector out;
  out.w = g.w.cwiseQuotient(acc.w.cwiseSqrt() + Vector::Constant(g.w.size(), epsilon));
  out.v = g.v.cwiseQuotient(acc.v.cwiseSqrt() + Vector::Constant(g.v.size(), epsilon));
  Matrix denom = acc.V.cwiseSqrt() + Matrix::Constant(g.V.rows(), g.V.cols(), epsilon);
  out.V = symmetrize(g.V.cwiseQuotient(denom));
  return out;
}

TangentVector descent_direction(const KernelParams& p, const EmpiricalMeasure& rho,
                                const EmpiricalMeasure& target, const Particle& z) {
  return witness_field(p, target, z) - witness_field(p, rho, z);
}

void write_trace_row_csv(std::ostream& os, const TraceRow& row) {
  os << row.tau << ',' << format_double(row.mmd2) << ',' << format_double(row.dissipation) << ','
     << format_double(row.step) << ',' << format_double(row.noise) << ',' << row.retries << ','
     << format_fixed(row.ms, 3) << '\n';
}

void write_trace_csv(std::ostream& os, const FlowTrace& trace) {
  os << FlowTrace::kCsvHeader << '\n';
  for (const TraceRow& row : trace.rows) write_trace_row_csv(os, row);
}

FlowEngine::FlowEngine(KernelParams params, EmpiricalMeasure target, FlowConfig config)
    : params_(params), target_(std::move(target)), config_(config) {
  params_.validate();
  config_.validate();
  target_.validate();
  target_term_ = target_self_term(params_, target_);
}

FlowState FlowEngine::make_state(const EmpiricalMeasure& rho0) const {
  FlowState st;
  st.tau = 0;
  st.measure = rho0;
  st.seed = config_.seed;
  if (config_.rms_precondition) {
    st.rms.assign(rho0.particles.size(),
                  RmsAccumulator::unit(rho0.feature_dim(), rho0.lifted_dim()));
  }
  return st;
}

void FlowEngine::euler_step(FlowState& state, double s) { step(state, s, 0.0, false); }

void FlowEngine::noisy_step(FlowState& state, double s, double beta) {
  step(state, s, beta, true);
}

void FlowEngine::step(FlowState& state, double s, double beta, bool noisy) {
  if (!(s > 0.0)) throw std::invalid_argument("step size must be positive");
  if (beta < 0.0) throw std::invalid_argument("noise level must be nonnegative");
  const auto t0 = std::chrono::steady_clock::now();

  const EmpiricalMeasure& frozen = state.measure;
  const int count = frozen.size();
  const int m = frozen.feature_dim();
  const int n = frozen.lifted_dim();
  if (count == 0) throw DimensionError("flow step: empty measure");
  if (m != target_.feature_dim() || n != target_.lifted_dim()) {
    throw DimensionError("flow step: source and target do not share (m, n)");
  }
  if (config_.rms_precondition && state.rms.size() != frozen.particles.size()) {
    state.rms.assign(frozen.particles.size(), RmsAccumulator::unit(m, n));
  }

  TraceRow row;
  row.tau = state.tau;
  row.mmd2 = mmd_squared(params_, frozen, target_, target_term_);

  std::vector<Particle> next(frozen.particles.size());
  std::vector<double> frozen_norm2(frozen.particles.size(), 0.0);
  std::vector<double> perturbed_norm2(frozen.particles.size(), 0.0);
  std::vector<double> step_eff(frozen.particles.size(), 0.0);
  std::vector<double> noise_eff(frozen.particles.size(), 0.0);
  std::vector<int> retries(frozen.particles.size(), 0);

  const auto run_particles = [&](const std::function<void(int)>& body) {
    try {
      parallel_for(count, config_.workers, body);
    } catch (const SafeguardExhaustedError&) {
      // terminal event row: the state the iteration failed from, zero step
      row.dissipation = 0.0;
      row.step = 0.0;
      row.noise = 0.0;
      row.retries = config_.max_safeguard_retries;
      row.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                   .count();
      trace_.rows.push_back(row);
      if (config_.noise_diagnostic) {
        trace_.noise_ratio.push_back(std::numeric_limits<double>::quiet_NaN());
      }
      if (observer_) observer_(state, row);
      throw;
    }
  };

  run_particles([&](int i) {
    const Particle& z = frozen.particles[static_cast<size_t>(i)];

    // Dissipation of the frozen measure; for the noiseless step this field is
    // also the update direction.
    const TangentVector phi_frozen = descent_direction(params_, frozen, target_, z);
    frozen_norm2[static_cast<size_t>(i)] = tangent_inner(z, phi_frozen, phi_frozen);

    Particle base = z;
    int tries = 0;
    if (noisy) {
      CounterRng rng(state.seed, static_cast<std::uint64_t>(state.tau),
                     static_cast<std::uint64_t>(i));
      const TangentVector u = sample_tangent_noise(rng, m, n);
      BackoffResult perturbed =
          safeguarded_exp(z, u, beta, config_.safeguard_backoff, config_.max_safeguard_retries,
                          state.tau, i);
      base = std::move(perturbed.z);
      noise_eff[static_cast<size_t>(i)] = perturbed.t_eff;
      tries += perturbed.retries;
    }

    TangentVector phi =
        noisy ? descent_direction(params_, frozen, target_, base) : phi_frozen;
    perturbed_norm2[static_cast<size_t>(i)] =
        noisy ? tangent_inner(base, phi, phi) : frozen_norm2[static_cast<size_t>(i)];
    if (config_.rms_precondition) {
      phi = precondition(state.rms[static_cast<size_t>(i)], phi, config_.rms_decay,
                         config_.rms_epsilon);
    }

    BackoffResult moved = safeguarded_exp(base, phi, s, config_.safeguard_backoff,
                                          config_.max_safeguard_retries, state.tau, i);
    next[static_cast<size_t>(i)] = std::move(moved.z);
    step_eff[static_cast<size_t>(i)] = moved.t_eff;
    retries[static_cast<size_t>(i)] = tries + moved.retries;
  });

  double diss = 0.0;
  double perturbed_total = 0.0;
  row.step = std::numeric_limits<double>::infinity();
  row.noise = noisy ? std::numeric_limits<double>::infinity() : 0.0;
  for (int i = 0; i < count; ++i) {
    diss += frozen_norm2[static_cast<size_t>(i)];
    perturbed_total += perturbed_norm2[static_cast<size_t>(i)];
    row.step = std::min(row.step, step_eff[static_cast<size_t>(i)]);
    if (noisy) row.noise = std::min(row.noise, noise_eff[static_cast<size_t>(i)]);
    row.retries += retries[static_cast<size_t>(i)];
  }
  row.dissipation = diss / count;

  state.measure.particles = std::move(next);
  state.tau += 1;

  row.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
               .count();
  trace_.rows.push_back(row);
  if (config_.noise_diagnostic) {
    double ratio = std::numeric_limits<double>::quiet_NaN();
    if (noisy && beta > 0.0 && row.mmd2 > 0.0) {
      ratio = (perturbed_total / count) / (beta * beta * 0.5 * row.mmd2);
    }
    trace_.noise_ratio.push_back(ratio);
  }
  if (observer_) observer_(state, row);
}

std::pair<EmpiricalMeasure, FlowTrace> FlowEngine::run(const EmpiricalMeasure& rho0) {
  rho0.validate();
  if (rho0.feature_dim() != target_.feature_dim() || rho0.lifted_dim() != target_.lifted_dim()) {
    throw DimensionError("run_flow: source and target do not share (m, n)");
  }
  trace_ = FlowTrace{};
  trace_.rows.reserve(static_cast<size_t>(config_.iterations));
  FlowState state = make_state(rho0);
  for (int tau = 0; tau < config_.iterations; ++tau) {
    const double s = config_.step_at(tau);
    const double beta = config_.noise_at(tau);
    if (beta > 0.0) {
      noisy_step(state, s, beta);
    } else {
      euler_step(state, s);
    }
  }
  return {std::move(state.measure), trace_};
}

std::pair<EmpiricalMeasure, FlowTrace> run_flow(const EmpiricalMeasure& rho0,
                                                const EmpiricalMeasure& target,
                                                const KernelParams& p, const FlowConfig& config,
                                                FlowEngine::StepObserver observer) {
  FlowEngine engine(p, target, config);
  if (observer) engine.set_observer(std::move(observer));
  return engine.run(rho0);
}

FlowState euler_step(const FlowState& state, const KernelParams& p,
                     const EmpiricalMeasure& target, double s, const FlowConfig& config,
                     TraceRow* row) {
  FlowEngine engine(p, target, config);
  FlowState next = state;
  engine.euler_step(next, s);
  if (row) *row = engine.trace().rows.back();
  return next;
}

FlowState noisy_step(const FlowState& state, const KernelParams& p,
                     const EmpiricalMeasure& target, double s, double beta,
                     const FlowConfig& config, TraceRow* row) {
  FlowEngine engine(p, target, config);
  FlowState next = state;
  engine.noisy_step(next, s, beta);
  if (row) *row = engine.trace().rows.back();
  return next;
}

}  // namespace fgflow
