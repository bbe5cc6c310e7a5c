#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tvopt/libsvm.hpp"
#include "tvopt/objectives.hpp"
#include "tvopt/optimizers.hpp"
#include "tvopt/topology.hpp"
#include "tvopt/trajectory.hpp"

namespace tvopt {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PartitionMode { Contiguous, Shuffled };

/// Splits the dataset into n shards whose sizes differ by at most one.
/// Contiguous keeps file order; Shuffled applies a seeded permutation first.
/// Shards are dense, raw-labeled, and disjointly cover the dataset.
std::vector<DataShard> partition_dataset(const LibsvmDataset& ds, int n_agents,
                                         PartitionMode mode,
                                         std::uint64_t seed = 0);

/// Centralized high-accuracy solve of f (accelerated gradient descent) down
/// to ||grad f(x)|| <= tol (1 + ||x||); the quadratic family short-circuits
/// to its analytic optimum. grad_norm_at_star is the Frobenius norm of the
/// stacked gradient at the replicated optimum.
ReferenceSolution solve_reference(const LocalObjective& obj,
                                  const SpectralConstants& constants,
                                  double tol = 1e-12,
                                  std::int64_t max_iterations = 2000000);

struct ObjectiveSpec {
  std::string kind;  // quadratic | logistic
  // quadratic
  int n = 0;
  double alpha = 0.0;
  int dim = -1;
  // logistic
  std::string dataset;
  double lambda = -1.0;  // < 0 selects the default rule 1e-3 * L_data / n
  PartitionMode partition = PartitionMode::Contiguous;
  std::uint64_t partition_seed = 0;
  bool partition_seed_set = false;
};

struct TopologySpec {
  std::string kind;  // fixed | alternating | random-gilbert
  int n = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int window = 1;
  std::string graph;        // fixed: complete|path|ring|star|empty
  std::string graphs_file;  // fixed (single block) or alternating
  double p = 0.5;           // random-gilbert edge probability
  int period = 1;           // random-gilbert regeneration period
  std::int64_t verify_horizon = 0;  // 0 selects 11 * window
};

struct MethodSpec {
  std::string name;   // exact | proj-gd | accelerated | diging | extra
  std::string label;  // CSV id; empty derives one from the settings
  InnerMode inner = InnerMode::fixed_rounds(1);
  double gamma = 0.0;  // 0 = solver default
  double alpha = 0.0;  // baselines; 0 = coarse grid search
  /// Outer iterations. 0 is allowed only for accuracy-driven proj-gd, where
  /// the worst-case count derived from (target_eps, r0) is substituted.
  int iterations = 0;
  bool ambient_constants = false;
};

struct ExperimentConfig {
  ObjectiveSpec objective;
  TopologySpec topology;
  std::vector<MethodSpec> methods;
  double target_eps = 1e-6;
  std::string output;  // base path: writes <output>.csv and <output>.manifest.json
  std::uint64_t seed = 0;
  std::vector<double> x0;  // empty = zeros; one entry = fill value
  double reference_tol = 1e-12;
  std::int64_t reference_max_iterations = 2000000;

  void validate() const;
};

/// Loads and validates a JSON config file.
ExperimentConfig load_config(const std::string& path);

struct MethodOutcome {
  std::string label;
  std::string name;
  bool ok = false;
  std::string error;
  Trajectory trajectory;
  // values actually used by the run
  double gamma = 0.0;
  double alpha = 0.0;
  double eps1 = 0.0;
  int iterations = 0;
};

struct ExperimentResult {
  std::vector<MethodOutcome> outcomes;
  AssumptionReport topology_report;
  SpectralConstants constants;
  ReferenceSolution reference;
  std::string csv_path;
  std::string manifest_path;

  bool all_failed() const;
};

/// Runs every configured method on the shared objective/schedule/reference,
/// streams MetricsRow records to <output>.csv and a run manifest to
/// <output>.manifest.json. A method failure is recorded and the remaining
/// methods continue. Identical configs produce byte-identical CSV files.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Coarse deterministic grid search for a baseline step size: candidates
/// alpha0 * 2^j, j = 0..14, around the documented default, probed for
/// probe_iterations and scored by final f-gap (ties prefer the smaller
/// step).
double tune_baseline_alpha(const std::string& method, const LocalObjective& obj,
                           const MixingSchedule& schedule,
                           const ScheduleStats& stats,
                           const SpectralConstants& constants,
                           const Eigen::VectorXd& x0, int probe_iterations,
                           const ReferenceSolution& ref);

}  // namespace tvopt
