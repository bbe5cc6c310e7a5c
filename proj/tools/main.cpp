#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "tvopt/consensus.hpp"
#include "tvopt/experiment.hpp"
#include "tvopt/libsvm.hpp"
#include "tvopt/rng.hpp"
#include "tvopt/topology.hpp"

namespace {

// exit codes: 0 success, 1 config error, 2 runtime failure, 3 parse error
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;
constexpr int kParseError = 3;

struct TopologySetup {
  tvopt::MixingSchedule schedule;
  tvopt::AssumptionReport report;
};

TopologySetup topology_from_config(const tvopt::ExperimentConfig& cfg) {
  tvopt::ScheduleSpec spec;
  spec.kind = cfg.topology.kind;
  spec.n = cfg.topology.n;
  spec.seed = cfg.topology.seed;
  spec.window = cfg.topology.window;
  spec.edge_prob = cfg.topology.p;
  spec.period = cfg.topology.period;
  if (cfg.topology.kind == "fixed") {
    if (!cfg.topology.graphs_file.empty()) {
      const auto graphs = tvopt::load_graph_list(cfg.topology.graphs_file, spec.n);
      if (graphs.size() != 1)
        throw tvopt::ConfigError("topology: fixed kind expects one graph block");
      spec.fixed_graph = graphs.front();
    } else if (cfg.topology.graph == "complete") {
      spec.fixed_graph = tvopt::Graph::complete(spec.n);
    } else if (cfg.topology.graph == "path") {
      spec.fixed_graph = tvopt::Graph::path(spec.n);
    } else if (cfg.topology.graph == "ring") {
      spec.fixed_graph = tvopt::Graph::ring(spec.n);
    } else if (cfg.topology.graph == "star") {
      spec.fixed_graph = tvopt::Graph::star(spec.n);
    } else if (cfg.topology.graph == "empty") {
      spec.fixed_graph = tvopt::Graph::empty(spec.n);
    } else {
      throw tvopt::ConfigError("topology: unknown graph '" + cfg.topology.graph + "'");
    }
  } else if (cfg.topology.kind == "alternating") {
    spec.alternating = tvopt::load_graph_list(cfg.topology.graphs_file, spec.n);
  }
  tvopt::MixingSchedule schedule = tvopt::build_schedule(spec);
  const std::int64_t horizon =
      cfg.topology.verify_horizon > 0
          ? cfg.topology.verify_horizon
          : 11 * static_cast<std::int64_t>(cfg.topology.window);
  tvopt::AssumptionReport report =
      tvopt::verify_assumption(schedule, cfg.topology.window, horizon);
  return {std::move(schedule), std::move(report)};
}

int cmd_run(const std::string& config_path) {
  const tvopt::ExperimentConfig cfg = tvopt::load_config(config_path);
  const tvopt::ExperimentResult res = tvopt::run_experiment(cfg);
  for (const tvopt::MethodOutcome& o : res.outcomes) {
    if (o.ok) {
      std::printf("%-14s iterations=%-6d comms=%-8lld final_fgap=%.3e\n",
                  o.label.c_str(), o.iterations,
                  static_cast<long long>(o.trajectory.back().comms),
                  o.trajectory.back().fgap);
    } else {
      std::fprintf(stderr, "%-14s FAILED: %s\n", o.label.c_str(), o.error.c_str());
    }
  }
  std::printf("metrics: %s\nmanifest: %s\n", res.csv_path.c_str(),
              res.manifest_path.c_str());
  return res.all_failed() ? kRuntimeError : kOk;
}

int cmd_check_topology(const std::string& config_path) {
  const tvopt::ExperimentConfig cfg = tvopt::load_config(config_path);
  const TopologySetup setup = topology_from_config(cfg);
  const tvopt::AssumptionReport& rep = setup.report;
  std::printf("n:                   %d\n", rep.n);
  std::printf("window (B):          %d\n", rep.window);
  std::printf("horizon:             %lld\n", static_cast<long long>(rep.horizon));
  std::printf("delta_hat:           %.12g\n", rep.delta_hat);
  std::printf("max residual:        %.3e\n", rep.max_residual);
  std::printf("sparsity violations: %lld\n",
              static_cast<long long>(rep.sparsity_violation_count));
  std::printf("assumption:          %s\n", rep.pass ? "PASS" : "FAIL");
  return rep.pass ? kOk : kRuntimeError;
}

int cmd_consensus_bench(const std::string& config_path, int rounds, int dim) {
  const tvopt::ExperimentConfig cfg = tvopt::load_config(config_path);
  const TopologySetup setup = topology_from_config(cfg);
  if (rounds <= 0) rounds = 20 * cfg.topology.window;

  tvopt::Rng rng(cfg.seed);
  Eigen::MatrixXd x(dim, cfg.topology.n);
  for (int j = 0; j < cfg.topology.n; ++j)
    for (int i = 0; i < dim; ++i) x(i, j) = rng.gaussian();

  std::fprintf(stderr, "delta_hat=%.6g window=%d horizon=%lld\n",
               setup.report.delta_hat, setup.report.window,
               static_cast<long long>(setup.report.horizon));
  std::printf("round,dist_to_consensus\n");
  std::printf("0,%.17g\n", tvopt::distance_to_consensus(x));
  for (int r = 0; r < rounds; ++r) {
    x = x * setup.schedule.matrix_at(r);
    std::printf("%d,%.17g\n", r + 1, tvopt::distance_to_consensus(x));
  }
  return kOk;
}

int cmd_parse(const std::string& file) {
  const tvopt::LibsvmDataset ds = tvopt::parse_libsvm(file);
  std::printf("rows=%lld dim=%d labels=%s\n", static_cast<long long>(ds.size()),
              ds.dim,
              ds.labels == tvopt::LibsvmDataset::Labels::ZeroOne ? "{0,1}"
                                                                 : "{-1,+1}");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized optimization over time-varying networks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string data_path;
  int bench_rounds = 0;
  int bench_dim = 1;

  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "JSON config file")->required();

  CLI::App* check = app.add_subcommand("check-topology",
                                       "verify the mixing assumption of a config");
  check->add_option("config", config_path, "JSON config file")->required();

  CLI::App* bench = app.add_subcommand("consensus-bench",
                                       "gossip decay curve for a config's topology");
  bench->add_option("config", config_path, "JSON config file")->required();
  bench->add_option("--rounds", bench_rounds, "gossip rounds (default 20*window)");
  bench->add_option("--dim", bench_dim, "vector dimension per agent")
      ->check(CLI::PositiveNumber);

  CLI::App* parse = app.add_subcommand("parse", "validate a LibSVM file");
  parse->add_option("file", data_path, "LibSVM data file")->required();

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(config_path);
    if (check->parsed()) return cmd_check_topology(config_path);
    if (bench->parsed()) return cmd_consensus_bench(config_path, bench_rounds, bench_dim);
    if (parse->parsed()) return cmd_parse(data_path);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  } catch (const tvopt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const tvopt::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kParseError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
  return kConfigError;
}
