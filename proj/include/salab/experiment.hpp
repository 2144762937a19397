#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "salab/estimators.hpp"
#include "salab/mdp.hpp"
#include "salab/operators.hpp"
#include "salab/qlearning.hpp"

namespace salab {

using Json = nlohmann::ordered_json;

enum class ExperimentKind {
  BiasSweep,     // tail-averaged bias per stepsize
  RrCompare,     // TA and RR bias per stepsize
  QExperiment,   // RrCompare over an MDP dynamic
  Coupling,      // shared-noise or stepsize-ratio coupling curves
  W2Convergence  // empirical W2 to the stationary sample over time
};

/// Everything a run needs; together with the code version it pins every
/// emitted number. Parsed from JSON (see parse_config) and echoed into the
/// manifest so runs can be replayed from their own output.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::BiasSweep;
  Json dynamic;  // operator or MDP description, kept in JSON form
  std::vector<double> alphas;
  int64_t steps = 0;
  int replicas = 0;
  double burn_in_fraction = 0.5;
  double beta = 0.5;
  uint64_t seed = 0;
  std::string out_dir = "salab-out";
  int threads = 1;
  // coupling
  std::string coupling_mode = "shared";  // or "stepsize-ratio"
  int coupling_k = 2;
  Vec theta0_a, theta0_b;
  // w2-convergence
  int64_t checkpoint_stride = 0;
  int64_t reference_factor = 10;

  Json to_json() const;
};

/// Parse + validate; throws ParseError naming the offending field. Accepts
/// either a bare config object or a manifest ({"config": {...}, ...}).
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config_file(const std::string& path);

/// Built-in presets, invoked by name.
std::vector<std::string> preset_names();
ExperimentConfig preset_config(const std::string& name);

/// The concrete dynamic built from ExperimentConfig::dynamic.
struct BuiltDynamic {
  bool is_mdp = false;
  // operator dynamic
  std::optional<Operator> op;
  std::optional<NoiseSampler> noise;
  Vec theta0;
  // MDP dynamic
  std::optional<Mdp> mdp;
  QMode mode = QMode::Synchronous;
  RewardDist reward = RewardDist::Gaussian;
  Vec q0;
  Vec q_star;  // solved at build time for MDP dynamics
};

/// Materializes the dynamic; random MDPs draw from stream.split(1000) so the
/// realized model depends only on the master seed.
BuiltDynamic build_dynamic(const ExperimentConfig& cfg, const RngStream& master);

struct CouplingCurve {
  double alpha = 0.0;
  std::vector<double> mean_sq_dist;  // per step, averaged over replicas
  double long_run_mean = 0.0;        // tail window average
};

struct W2Point {
  int64_t step = 0;
  double w2 = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string out_dir;
  std::vector<std::string> files;  // relative names, in emission order
  // In-memory artifacts, populated per kind.
  std::optional<BiasReport> bias;
  std::vector<CouplingCurve> coupling;
  std::vector<W2Point> w2;
};

/// Runs the experiment and writes its artifacts (bias.csv, slope.json,
/// coupling.csv, w2.csv, mdp.txt as applicable, manifest.json always) under
/// config.out_dir. Output assembly is ordered by (stepsize, replica) index,
/// so results are byte-identical for any thread count.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Human-readable report: q*, per-state optimal sets with tied/rooted
/// flags, the Type A/B call, and gamma0.
std::string describe_mdp_text(const Mdp& mdp, double tie_tol = 1e-9);

}  // namespace salab
