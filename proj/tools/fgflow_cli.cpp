// fgflow -- gradient flows of feature-Gaussian measures.
//
// Subcommands: lift, flow, project, mixture-demo, eval. Every run is fully
// determined by (inputs, config, seed); each command that writes files also
// writes the resolved config it ran with, so a run can be reproduced from its
// own output directory.

#include "CLI11.hpp"
#include "json.hpp"

#include "fgflow/flow.hpp"
#include "fgflow/format.hpp"
#include "fgflow/io.hpp"
#include "fgflow/kernel.hpp"
#include "fgflow/lifting.hpp"
#include "fgflow/mixture.hpp"
#include "fgflow/mmd.hpp"
#include "fgflow/transport.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fgflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;      // unexpected failures
constexpr int kExitIo = 2;         // unreadable/corrupt inputs, parse errors
constexpr int kExitSafeguard = 3;  // flow safeguard exhausted

json default_config_json() {
  return json{
      {"alpha", 1.0},
      {"beta", 1.0},
      {"gamma", 1.0},
      {"step_size", 0.05},
      {"step_schedule", "constant"},
      {"step_tau0", 1.0},
      {"noise_level", 0.0},
      {"noise_schedule", "constant"},
      {"iterations", 1000},
      {"safeguard_backoff", 0.5},
      {"max_safeguard_retries", 30},
      {"seed", 0},
      {"preconditioner", "none"},
      {"noise_diagnostic", false},
      {"embedding", "identity"},
      {"embedding_dim", 0},
      {"label_method", "lp"},
      {"knn_k", 3},
      {"reg_eps", 1e-6},
      {"workers", 1},
      {"snapshot_every", 100},
      {"scenario", "four_to_four"},
      {"data", ""},
      {"source", ""},
      {"target", ""},
      {"measure", ""},
      {"moments", ""},
      {"out", "."},
  };
}

void merge_known(json& base, const json& overlay) {
  for (const auto& [key, value] : overlay.items()) {
    if (!base.contains(key)) {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
    base[key] = value;
  }
}

KernelParams kernel_from(const json& cfg) {
  KernelParams p{cfg.at("alpha").get<double>(), cfg.at("beta").get<double>(),
                 cfg.at("gamma").get<double>()};
  p.validate();
  return p;
}

FlowConfig flow_from(const json& cfg) {
  FlowConfig fc;
  fc.step_size = cfg.at("step_size").get<double>();
  const std::string sched = cfg.at("step_schedule").get<std::string>();
  if (sched == "constant") {
    fc.step_schedule = StepSchedule::kConstant;
  } else if (sched == "harmonic") {
    fc.step_schedule = StepSchedule::kHarmonic;
  } else {
    throw std::invalid_argument("step_schedule must be constant or harmonic");
  }
  fc.step_tau0 = cfg.at("step_tau0").get<double>();
  fc.noise_level = cfg.at("noise_level").get<double>();
  const std::string nsched = cfg.at("noise_schedule").get<std::string>();
  if (nsched == "constant") {
    fc.noise_schedule = NoiseSchedule::kConstant;
  } else if (nsched == "inverse_sqrt") {
    fc.noise_schedule = NoiseSchedule::kInverseSqrt;
  } else {
    throw std::invalid_argument("noise_schedule must be constant or inverse_sqrt");
  }
  fc.iterations = cfg.at("iterations").get<int>();
  fc.safeguard_backoff = cfg.at("safeguard_backoff").get<double>();
  fc.max_safeguard_retries = cfg.at("max_safeguard_retries").get<int>();
  fc.seed = cfg.at("seed").get<std::uint64_t>();
  const std::string precond = cfg.at("preconditioner").get<std::string>();
  if (precond == "none") {
    fc.rms_precondition = false;
  } else if (precond == "rms") {
    fc.rms_precondition = true;
  } else {
    throw std::invalid_argument("preconditioner must be none or rms");
  }
  fc.noise_diagnostic = cfg.at("noise_diagnostic").get<bool>();
  fc.workers = cfg.at("workers").get<int>();
  fc.validate();
  return fc;
}

json flow_to_json(const FlowConfig& fc) {
  return json{
      {"step_size", fc.step_size},
      {"step_schedule", fc.step_schedule == StepSchedule::kHarmonic ? "harmonic" : "constant"},
      {"step_tau0", fc.step_tau0},
      {"noise_level", fc.noise_level},
      {"noise_schedule",
       fc.noise_schedule == NoiseSchedule::kInverseSqrt ? "inverse_sqrt" : "constant"},
      {"iterations", fc.iterations},
      {"safeguard_backoff", fc.safeguard_backoff},
      {"max_safeguard_retries", fc.max_safeguard_retries},
      {"seed", fc.seed},
      {"preconditioner", fc.rms_precondition ? "rms" : "none"},
      {"noise_diagnostic", fc.noise_diagnostic},
  };
}

void write_resolved_config(const json& cfg, const fs::path& out_dir) {
  std::ofstream os(out_dir / "resolved_config.json");
  if (!os) throw IoError("cannot write resolved config in '" + out_dir.string() + "'");
  os << cfg.dump(2) << '\n';
}

fs::path ensure_out_dir(const json& cfg) {
  fs::path out = cfg.at("out").get<std::string>();
  if (out.empty()) throw std::invalid_argument("--out directory required");
  fs::create_directories(out);
  return out;
}

std::string require_path(const json& cfg, const char* key, const char* flag) {
  const std::string p = cfg.at(key).get<std::string>();
  if (p.empty()) {
    throw std::invalid_argument(std::string("missing required input: ") + flag);
  }
  return p;
}

int cmd_lift(const json& cfg) {
  const fs::path out = ensure_out_dir(cfg);
  const LabeledDataset data = read_dataset_file(require_path(cfg, "data", "--data"));

  const std::string kind = cfg.at("embedding").get<std::string>();
  Embedding emb;
  if (kind == "identity") {
    emb = fit_embedding(data, EmbeddingKind::kIdentity, data.feature_dim());
  } else if (kind == "pca") {
    const int n = cfg.at("embedding_dim").get<int>();
    emb = fit_embedding(data, EmbeddingKind::kPca, n);
    if (emb.rank_padded) {
      std::cerr << "warning: feature covariance rank below " << n
                << "; trailing principal directions are an arbitrary orthonormal completion\n";
    }
  } else {
    throw std::invalid_argument("embedding must be identity or pca");
  }

  const ClassMoments moments = class_moments(data, emb, cfg.at("reg_eps").get<double>());
  const EmpiricalMeasure measure = lift_dataset(data, emb, moments);

  write_measure_file((out / "measure.ndjson").string(), measure);
  write_moments_file((out / "moments.json").string(), moments);
  write_resolved_config(cfg, out);
  std::cerr << "lifted " << measure.size() << " samples, " << moments.size() << " classes\n";
  return kExitOk;
}

int cmd_flow(const json& cfg) {
  const fs::path out = ensure_out_dir(cfg);
  const EmpiricalMeasure source = read_measure_file(require_path(cfg, "source", "--source"));
  const EmpiricalMeasure target = read_measure_file(require_path(cfg, "target", "--target"));

  const KernelParams kernel = kernel_from(cfg);
  const FlowConfig flow_cfg = flow_from(cfg);

  std::ofstream trace_os(out / "trace.csv");
  if (!trace_os) throw IoError("cannot write trace in '" + out.string() + "'");
  trace_os << FlowTrace::kCsvHeader << '\n';
  // flushed per iteration so an interrupted run still leaves a usable trace
  const auto observer = [&trace_os](const FlowState&, const TraceRow& row) {
    write_trace_row_csv(trace_os, row);
    trace_os.flush();
  };

  write_resolved_config(cfg, out);
  auto [flowed, trace] = run_flow(source, target, kernel, flow_cfg, observer);
  write_measure_file((out / "flowed.ndjson").string(), flowed);
  std::cerr << "flow finished after " << trace.rows.size() << " iterations\n";
  return kExitOk;
}

int cmd_project(const json& cfg) {
  const fs::path out = ensure_out_dir(cfg);
  const EmpiricalMeasure measure = read_measure_file(require_path(cfg, "measure", "--measure"));

  std::vector<std::string> labels;
  const std::string method = cfg.at("label_method").get<std::string>();
  if (method == "lp") {
    const ClassMoments moments = read_moments_file(require_path(cfg, "moments", "--moments"));
    labels = project_labels_lp(measure, moments);
  } else if (method == "knn") {
    const EmpiricalMeasure target = read_measure_file(require_path(cfg, "target", "--target"));
    labels = project_labels_knn(measure, target, cfg.at("knn_k").get<int>());
  } else {
    throw std::invalid_argument("label_method must be lp or knn");
  }

  write_labels_csv_file((out / "labels.csv").string(), labels);
  write_resolved_config(cfg, out);
  std::cerr << "projected " << labels.size() << " labels via " << method << '\n';
  return kExitOk;
}

int cmd_mixture_demo(const json& cfg, const json& user_overrides) {
  const fs::path out = ensure_out_dir(cfg);
  const MixtureScenario scenario = parse_scenario(cfg.at("scenario").get<std::string>());
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  MixtureSetup setup = mixture_setup(scenario);

  // scenario defaults overlaid with whatever the user pinned explicitly
  json demo_cfg = cfg;
  demo_cfg["alpha"] = setup.kernel.alpha;
  demo_cfg["beta"] = setup.kernel.beta;
  demo_cfg["gamma"] = setup.kernel.gamma;
  merge_known(demo_cfg, flow_to_json(setup.flow));
  demo_cfg["label_method"] = setup.knn_labels ? "knn" : "lp";
  demo_cfg["knn_k"] = setup.knn_k;
  merge_known(demo_cfg, user_overrides);
  demo_cfg["seed"] = seed;
  demo_cfg["scenario"] = scenario_name(scenario);

  const KernelParams kernel = kernel_from(demo_cfg);
  const FlowConfig flow_cfg = flow_from(demo_cfg);
  const int snapshot_every = cfg.at("snapshot_every").get<int>();

  MixtureDemoResult result =
      run_mixture_demo(scenario, seed, &kernel, &flow_cfg, snapshot_every);

  const std::string method = demo_cfg.at("label_method").get<std::string>();
  if (method == "lp" && setup.knn_labels) {
    result.projected_labels = project_labels_lp(result.flowed, result.target_moments);
  } else if (method == "knn") {
    const int k = demo_cfg.at("knn_k").get<int>();
    if (!setup.knn_labels || k != setup.knn_k) {
      result.projected_labels = project_labels_knn(result.flowed, result.target, k);
    }
  }

  write_measure_file((out / "source.ndjson").string(), result.source);
  write_measure_file((out / "target.ndjson").string(), result.target);
  write_measure_file((out / "flowed.ndjson").string(), result.flowed);
  write_moments_file((out / "moments.json").string(), result.target_moments);
  write_labels_csv_file((out / "labels.csv").string(), result.projected_labels);
  write_trace_csv_file((out / "trace.csv").string(), result.trace);

  if (snapshot_every > 0) {
    fs::create_directories(out / "snapshots");
    for (const auto& [tau, measure] : result.snapshots) {
      char name[32];
      std::snprintf(name, sizeof(name), "snapshot_%06d.ndjson", tau);
      write_measure_file((out / "snapshots" / name).string(), measure);
    }
  }

  json summary{
      {"scenario", scenario_name(scenario)},
      {"seed", seed},
      {"particles", result.flowed.size()},
      {"initial_mmd2", result.initial_mmd2},
      {"final_mmd2", result.final_mmd2},
      {"iterations", static_cast<int>(result.trace.rows.size())},
  };
  {
    std::ofstream os(out / "summary.json");
    if (!os) throw IoError("cannot write summary in '" + out.string() + "'");
    os << summary.dump(2) << '\n';
  }
  write_resolved_config(demo_cfg, out);
  std::cerr << "mixture demo " << scenario_name(scenario) << ": mmd2 " << result.initial_mmd2
            << " -> " << result.final_mmd2 << '\n';
  return kExitOk;
}

int cmd_eval(const json& cfg) {
  const EmpiricalMeasure measure = read_measure_file(require_path(cfg, "measure", "--measure"));
  const EmpiricalMeasure target = read_measure_file(require_path(cfg, "target", "--target"));
  const KernelParams kernel = kernel_from(cfg);

  const double mmd2 = mmd_squared(kernel, measure, target);
  json report{
      {"mmd2", mmd2},
      {"loss", 0.5 * mmd2},
      {"dissipation", dissipation(kernel, measure, target)},
  };
  std::cout << report.dump() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient flows of feature-Gaussian measures"};
  app.require_subcommand(1);

  std::string config_path;
  json flags;  // only values the user passed explicitly

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file; flags override its values");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { flags["seed"] = v; }, "RNG seed");
    cmd->add_option_function<int>(
        "--workers", [&](int v) { flags["workers"] = v; }, "worker threads for particle updates");
    cmd->add_option_function<std::string>(
        "--out", [&](const std::string& v) { flags["out"] = v; }, "output directory");
  };
  const auto add_kernel = [&](CLI::App* cmd) {
    cmd->add_option_function<double>(
        "--alpha", [&](double v) { flags["alpha"] = v; }, "feature bandwidth");
    cmd->add_option_function<double>(
        "--beta", [&](double v) { flags["beta"] = v; }, "mean bandwidth");
    cmd->add_option_function<double>(
        "--gamma", [&](double v) { flags["gamma"] = v; }, "covariance bandwidth");
  };
  const auto add_flow = [&](CLI::App* cmd) {
    cmd->add_option_function<double>(
        "--step-size", [&](double v) { flags["step_size"] = v; }, "initial step size s0");
    cmd->add_option_function<std::string>(
        "--step-schedule", [&](const std::string& v) { flags["step_schedule"] = v; },
        "constant | harmonic");
    cmd->add_option_function<double>(
        "--step-tau0", [&](double v) { flags["step_tau0"] = v; }, "harmonic decay scale");
    cmd->add_option_function<double>(
        "--noise-level", [&](double v) { flags["noise_level"] = v; }, "noise level");
    cmd->add_option_function<std::string>(
        "--noise-schedule", [&](const std::string& v) { flags["noise_schedule"] = v; },
        "constant | inverse_sqrt");
    cmd->add_option_function<int>(
        "--iterations", [&](int v) { flags["iterations"] = v; }, "iteration count T");
    cmd->add_option_function<std::string>(
        "--preconditioner", [&](const std::string& v) { flags["preconditioner"] = v; },
        "none | rms");
    cmd->add_flag_function(
        "--noise-diagnostic", [&](std::int64_t) { flags["noise_diagnostic"] = true; },
        "log the per-step noise-level ratio");
  };
  const auto add_labeling = [&](CLI::App* cmd) {
    cmd->add_option_function<std::string>(
        "--label-method", [&](const std::string& v) { flags["label_method"] = v; }, "lp | knn");
    cmd->add_option_function<int>(
        "--k", [&](int v) { flags["knn_k"] = v; }, "neighbor count for knn");
  };

  CLI::App* lift = app.add_subcommand("lift", "lift a labeled dataset to a measure");
  add_common(lift);
  lift->add_option_function<std::string>(
      "--data", [&](const std::string& v) { flags["data"] = v; }, "dataset (csv or ndjson)");
  lift->add_option_function<std::string>(
      "--embedding", [&](const std::string& v) { flags["embedding"] = v; }, "identity | pca");
  lift->add_option_function<int>(
      "--embedding-dim", [&](int v) { flags["embedding_dim"] = v; }, "pca output dimension n");
  lift->add_option_function<double>(
      "--reg-eps", [&](double v) { flags["reg_eps"] = v; }, "covariance eigenvalue floor");

  CLI::App* flow = app.add_subcommand("flow", "run the gradient flow between two measures");
  add_common(flow);
  add_kernel(flow);
  add_flow(flow);
  flow->add_option_function<std::string>(
      "--source", [&](const std::string& v) { flags["source"] = v; }, "source measure");
  flow->add_option_function<std::string>(
      "--target", [&](const std::string& v) { flags["target"] = v; }, "target measure");

  CLI::App* project = app.add_subcommand("project", "recover labels for a flowed measure");
  add_common(project);
  add_labeling(project);
  project->add_option_function<std::string>(
      "--measure", [&](const std::string& v) { flags["measure"] = v; }, "measure to label");
  project->add_option_function<std::string>(
      "--moments", [&](const std::string& v) { flags["moments"] = v; }, "class moments (lp)");
  project->add_option_function<std::string>(
      "--target", [&](const std::string& v) { flags["target"] = v; }, "labeled target (knn)");

  CLI::App* demo = app.add_subcommand("mixture-demo", "run a bundled Gaussian-mixture scenario");
  add_common(demo);
  add_kernel(demo);
  add_flow(demo);
  add_labeling(demo);
  demo->add_option_function<std::string>(
      "--scenario", [&](const std::string& v) { flags["scenario"] = v; },
      "four_to_four | two_to_four");
  demo->add_option_function<int>(
      "--snapshot-every", [&](int v) { flags["snapshot_every"] = v; },
      "snapshot cadence in iterations (0 disables)");

  CLI::App* eval = app.add_subcommand("eval", "print mmd2/loss/dissipation for two measures");
  add_common(eval);
  add_kernel(eval);
  eval->add_option_function<std::string>(
      "--measure", [&](const std::string& v) { flags["measure"] = v; }, "measure");
  eval->add_option_function<std::string>(
      "--target", [&](const std::string& v) { flags["target"] = v; }, "target measure");

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = default_config_json();
    json user = json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw IoError("cannot open config '" + config_path + "'");
      try {
        user = json::parse(is);
      } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid config JSON: ") + e.what());
      }
    }
    user.update(flags);  // flags win over file values
    merge_known(cfg, user);

    if (lift->parsed()) return cmd_lift(cfg);
    if (flow->parsed()) return cmd_flow(cfg);
    if (project->parsed()) return cmd_project(cfg);
    if (demo->parsed()) return cmd_mixture_demo(cfg, user);
    if (eval->parsed()) return cmd_eval(cfg);
    std::cerr << "no subcommand\n";
    return kExitError;
  } catch (const SafeguardExhaustedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSafeguard;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
