#include "tvopt/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "tvopt/baselines.hpp"
#include "tvopt/consensus.hpp"
#include "tvopt/rng.hpp"

namespace tvopt {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Graph named_graph(const std::string& name, int n) {
  if (name == "complete") return Graph::complete(n);
  if (name == "path") return Graph::path(n);
  if (name == "ring") return Graph::ring(n);
  if (name == "star") return Graph::star(n);
  if (name == "empty") return Graph::empty(n);
  throw ConfigError("topology: unknown graph '" + name + "'");
}

std::string derived_label(const MethodSpec& m) {
  if (!m.label.empty()) return m.label;
  const std::string stem = m.name == "accelerated" ? "accel" : m.name;
  if (m.name == "proj-gd" || m.name == "accelerated") {
    if (m.inner.kind == InnerMode::Kind::AccuracyDriven) return stem + "-acc";
    return stem + "-" + std::to_string(m.inner.rounds);
  }
  return stem;
}

bool trajectory_finite(const Trajectory& t) {
  for (const TrajectoryRecord& r : t.records) {
    if (!std::isfinite(r.fgap) || !std::isfinite(r.dist_sq_to_opt) ||
        !std::isfinite(r.dist_to_consensus) || !std::isfinite(r.r_k))
      return false;
  }
  return true;
}

}  // namespace

std::vector<DataShard> partition_dataset(const LibsvmDataset& ds, int n_agents,
                                         PartitionMode mode, std::uint64_t seed) {
  const std::int64_t m = ds.size();
  if (n_agents < 1) throw std::invalid_argument("partition_dataset: n must be >= 1");
  if (n_agents > m)
    throw std::invalid_argument("partition_dataset: more agents than samples");

  std::vector<std::int64_t> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  if (mode == PartitionMode::Shuffled) {
    Rng rng(seed);
    for (std::int64_t i = m - 1; i > 0; --i) {
      const auto j = static_cast<std::int64_t>(rng.integer(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
  }

  const std::int64_t base = m / n_agents;
  const std::int64_t extra = m % n_agents;
  std::vector<DataShard> shards;
  shards.reserve(static_cast<std::size_t>(n_agents));
  std::int64_t cursor = 0;
  for (int i = 0; i < n_agents; ++i) {
    const std::int64_t count = base + (i < extra ? 1 : 0);
    DataShard shard;
    shard.features = Eigen::MatrixXd::Zero(count, ds.dim);
    shard.labels.resize(count);
    for (std::int64_t r = 0; r < count; ++r) {
      const LibsvmRow& row = ds.rows[static_cast<std::size_t>(order[static_cast<std::size_t>(cursor + r)])];
      for (const auto& [idx, val] : row.features) shard.features(r, idx) = val;
      shard.labels(r) = row.label;
    }
    cursor += count;
    shards.push_back(std::move(shard));
  }
  return shards;
}

ReferenceSolution solve_reference(const LocalObjective& obj,
                                  const SpectralConstants& constants, double tol,
                                  std::int64_t max_iterations) {
  constants.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("solve_reference: tol must be > 0");

  ReferenceSolution ref;
  Eigen::VectorXd x_star;
  if (obj.analytic_optimum(x_star)) {
    ref.x_star = std::move(x_star);
  } else {
    const double step = 1.0 / constants.L_f;
    const double kappa = constants.kappa_f();
    const double momentum = (std::sqrt(kappa) - 1.0) / (std::sqrt(kappa) + 1.0);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(obj.dimension());
    Eigen::VectorXd y = x;
    bool converged = false;
    for (std::int64_t t = 0; t < max_iterations; ++t) {
      const Eigen::VectorXd gx = obj.f_gradient(x);
      if (gx.norm() <= tol * (1.0 + x.norm())) {
        converged = true;
        break;
      }
      const Eigen::VectorXd gy = obj.f_gradient(y);
      Eigen::VectorXd x_next = y - step * gy;
      y = x_next + momentum * (x_next - x);
      x = std::move(x_next);
    }
    if (!converged)
      throw std::runtime_error("solve_reference: iteration cap exceeded before tol");
    ref.x_star = std::move(x);
  }

  ref.f_star = obj.f_value(ref.x_star);
  ref.grad_norm_at_star =
      obj.stacked_gradient(ref.x_star.replicate(1, obj.agents())).norm();
  return ref;
}

void ExperimentConfig::validate() const {
  if (!(target_eps > 0.0)) throw ConfigError("config: target_eps must be > 0");
  if (output.empty()) throw ConfigError("config: output path required");
  if (methods.empty()) throw ConfigError("config: at least one method required");

  if (objective.kind != "quadratic" && objective.kind != "logistic")
    throw ConfigError("config: objective.kind must be quadratic or logistic");
  if (objective.kind == "quadratic") {
    if (objective.n < 1) throw ConfigError("config: quadratic objective needs n >= 1");
    if (!(objective.alpha > 0.0))
      throw ConfigError("config: quadratic objective needs alpha > 0");
  } else {
    if (objective.dataset.empty())
      throw ConfigError("config: logistic objective needs a dataset path");
    if (objective.partition == PartitionMode::Shuffled && !objective.partition_seed_set)
      throw ConfigError("config: shuffled partition needs partition_seed");
  }

  if (topology.kind != "fixed" && topology.kind != "alternating" &&
      topology.kind != "random-gilbert")
    throw ConfigError("config: topology.kind must be fixed, alternating or random-gilbert");
  if (topology.n < 2) throw ConfigError("config: topology needs n >= 2");
  if (topology.window < 1) throw ConfigError("config: topology window must be >= 1");
  if (topology.kind == "random-gilbert" && !topology.seed_set)
    throw ConfigError("config: random-gilbert topology needs an explicit seed");
  if (topology.kind == "alternating" && topology.graphs_file.empty())
    throw ConfigError("config: alternating topology needs graphs_file");
  if (topology.kind == "fixed" && topology.graph.empty() && topology.graphs_file.empty())
    throw ConfigError("config: fixed topology needs graph or graphs_file");

  if (objective.kind == "quadratic" && objective.n != topology.n)
    throw ConfigError("config: objective n and topology n differ");

  std::set<std::string> labels;
  for (const MethodSpec& m : methods) {
    if (m.name != "exact" && m.name != "proj-gd" && m.name != "accelerated" &&
        m.name != "diging" && m.name != "extra")
      throw ConfigError("config: unknown method '" + m.name + "'");
    if (m.iterations < 0) throw ConfigError("config: iterations must be >= 0");
    if (m.iterations == 0 &&
        !(m.name == "proj-gd" && m.inner.kind == InnerMode::Kind::AccuracyDriven))
      throw ConfigError("config: method '" + m.name +
                        "' needs explicit iterations");
    if (!labels.insert(derived_label(m)).second)
      throw ConfigError("config: duplicate method label '" + derived_label(m) + "'");
  }
}

namespace {

const ordered_json& require_key(const ordered_json& j, const std::string& key,
                                const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError("config: missing " + where + "." + key);
  return *it;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }

  try {
    ExperimentConfig cfg;
    cfg.seed = require_key(j, "seed", "").get<std::uint64_t>();
    cfg.target_eps = require_key(j, "target_eps", "").get<double>();
    cfg.output = require_key(j, "output", "").get<std::string>();

    if (j.contains("x0")) {
      if (j["x0"].is_number()) {
        cfg.x0 = {j["x0"].get<double>()};
      } else {
        cfg.x0 = j["x0"].get<std::vector<double>>();
      }
    }
    if (j.contains("reference")) {
      const auto& r = j["reference"];
      cfg.reference_tol = r.value("tol", cfg.reference_tol);
      cfg.reference_max_iterations =
          r.value("max_iterations", cfg.reference_max_iterations);
    }

    const auto& obj = require_key(j, "objective", "");
    cfg.objective.kind = require_key(obj, "kind", "objective").get<std::string>();
    if (cfg.objective.kind == "quadratic") {
      cfg.objective.n = require_key(obj, "n", "objective").get<int>();
      cfg.objective.alpha = require_key(obj, "alpha", "objective").get<double>();
      cfg.objective.dim = obj.value("dim", -1);
    } else {
      cfg.objective.dataset = require_key(obj, "dataset", "objective").get<std::string>();
      cfg.objective.lambda = obj.value("lambda", -1.0);
      const std::string part = obj.value("partition", "contiguous");
      if (part == "contiguous") {
        cfg.objective.partition = PartitionMode::Contiguous;
      } else if (part == "shuffled") {
        cfg.objective.partition = PartitionMode::Shuffled;
      } else {
        throw ConfigError("config: partition must be contiguous or shuffled");
      }
      if (obj.contains("partition_seed")) {
        cfg.objective.partition_seed = obj["partition_seed"].get<std::uint64_t>();
        cfg.objective.partition_seed_set = true;
      }
    }

    const auto& topo = require_key(j, "topology", "");
    cfg.topology.kind = require_key(topo, "kind", "topology").get<std::string>();
    cfg.topology.n = require_key(topo, "n", "topology").get<int>();
    cfg.topology.window = topo.value("window", 1);
    if (topo.contains("seed")) {
      cfg.topology.seed = topo["seed"].get<std::uint64_t>();
      cfg.topology.seed_set = true;
    }
    cfg.topology.graph = topo.value("graph", "");
    cfg.topology.graphs_file = topo.value("graphs_file", "");
    cfg.topology.p = topo.value("p", 0.5);
    cfg.topology.period = topo.value("period", 1);
    cfg.topology.verify_horizon = topo.value("verify_horizon", std::int64_t{0});

    for (const auto& m : require_key(j, "methods", "")) {
      MethodSpec spec;
      spec.name = require_key(m, "name", "method").get<std::string>();
      spec.label = m.value("label", "");
      spec.gamma = m.value("gamma", 0.0);
      spec.alpha = m.value("alpha", 0.0);
      spec.iterations = m.value("iterations", 0);
      spec.ambient_constants = m.value("ambient_constants", false);
      const bool has_rounds = m.contains("rounds");
      const bool has_accuracy = m.contains("accuracy") && m["accuracy"].get<bool>();
      if (spec.name == "proj-gd" || spec.name == "accelerated") {
        if (has_rounds == has_accuracy)
          throw ConfigError("config: method '" + spec.name +
                            "' needs exactly one of rounds / accuracy");
        if (has_rounds) {
          spec.inner = InnerMode::fixed_rounds(m["rounds"].get<int>());
        } else {
          spec.inner = InnerMode::accuracy_driven(m.value("eps1", 0.0));
        }
      }
      cfg.methods.push_back(std::move(spec));
    }

    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
}

bool ExperimentResult::all_failed() const {
  return !outcomes.empty() &&
         std::none_of(outcomes.begin(), outcomes.end(),
                      [](const MethodOutcome& o) { return o.ok; });
}

double tune_baseline_alpha(const std::string& method, const LocalObjective& obj,
                           const MixingSchedule& schedule,
                           const ScheduleStats& stats,
                           const SpectralConstants& constants,
                           const Eigen::VectorXd& x0, int probe_iterations,
                           const ReferenceSolution& ref) {
  const double alpha0 = diging_default_alpha(constants, stats.delta_hat);
  double best_alpha = alpha0;
  double best_fgap = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= 14; ++j) {
    const double alpha = alpha0 * static_cast<double>(1 << j);
    Trajectory t = method == "diging"
                       ? diging(obj, schedule, x0, alpha, probe_iterations, ref)
                       : extra(obj, schedule, x0, alpha, probe_iterations, ref);
    if (!trajectory_finite(t)) continue;
    const double fgap = t.back().fgap;
    if (fgap < best_fgap) {
      best_fgap = fgap;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

namespace {

struct BuiltObjective {
  std::unique_ptr<LocalObjective> obj;
  double lambda_used = 0.0;  // logistic only
};

BuiltObjective build_objective(const ExperimentConfig& cfg) {
  BuiltObjective built;
  if (cfg.objective.kind == "quadratic") {
    built.obj = quadratic_family(cfg.objective.n, cfg.objective.alpha,
                                 cfg.objective.dim);
    return built;
  }
  const LibsvmDataset ds = parse_libsvm(cfg.objective.dataset);
  const std::vector<DataShard> shards =
      partition_dataset(ds, cfg.topology.n, cfg.objective.partition,
                        cfg.objective.partition_seed);
  double lambda = cfg.objective.lambda;
  if (lambda < 0.0) {
    // default rule: 1e-3 times the restricted-to-K data smoothness L_data/n
    const LogisticObjective probe(shards, 0.0);
    lambda = 1e-3 * probe.data_smoothness() / cfg.topology.n;
  }
  built.obj = logistic_objective(shards, lambda);
  built.lambda_used = lambda;
  return built;
}

MixingSchedule build_topology(const TopologySpec& spec) {
  ScheduleSpec s;
  s.kind = spec.kind;
  s.n = spec.n;
  s.seed = spec.seed;
  s.window = spec.window;
  s.edge_prob = spec.p;
  s.period = spec.period;
  if (spec.kind == "fixed") {
    if (!spec.graphs_file.empty()) {
      const auto graphs = load_graph_list(spec.graphs_file, spec.n);
      if (graphs.size() != 1)
        throw ConfigError("topology: fixed kind expects one graph in " +
                          spec.graphs_file);
      s.fixed_graph = graphs.front();
    } else {
      s.fixed_graph = named_graph(spec.graph, spec.n);
    }
  } else if (spec.kind == "alternating") {
    s.alternating = load_graph_list(spec.graphs_file, spec.n);
  }
  return build_schedule(s);
}

Eigen::VectorXd resolve_x0(const std::vector<double>& x0, int dim) {
  if (x0.empty()) return Eigen::VectorXd::Zero(dim);
  if (x0.size() == 1) return Eigen::VectorXd::Constant(dim, x0.front());
  if (static_cast<int>(x0.size()) != dim)
    throw ConfigError("config: x0 length does not match objective dimension");
  return Eigen::Map<const Eigen::VectorXd>(x0.data(), dim);
}

void write_csv(const std::string& path, const std::vector<MethodOutcome>& outcomes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("run_experiment: cannot write " + path);
  out << "method,k,comms,grads,fgap,dist_sq_to_opt,dist_to_consensus,r_k\n";
  for (const MethodOutcome& o : outcomes) {
    if (!o.ok) continue;
    for (const TrajectoryRecord& r : o.trajectory.records) {
      out << o.label << ',' << r.k << ',' << r.comms << ',' << r.grads << ','
          << fmt_double(r.fgap) << ',' << fmt_double(r.dist_sq_to_opt) << ','
          << fmt_double(r.dist_to_consensus) << ',' << fmt_double(r.r_k) << '\n';
    }
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  ExperimentResult result;
  BuiltObjective built = build_objective(cfg);
  const LocalObjective& obj = *built.obj;
  result.constants = estimate_constants(obj);

  const MixingSchedule schedule = build_topology(cfg.topology);
  const std::int64_t horizon = cfg.topology.verify_horizon > 0
                                   ? cfg.topology.verify_horizon
                                   : 11 * static_cast<std::int64_t>(cfg.topology.window);
  result.topology_report = verify_assumption(schedule, cfg.topology.window, horizon);
  const ScheduleStats stats = result.topology_report.stats();

  result.reference = solve_reference(obj, result.constants, cfg.reference_tol,
                                     cfg.reference_max_iterations);

  const Eigen::VectorXd x0 = resolve_x0(cfg.x0, obj.dimension());
  const double r0 = std::sqrt(static_cast<double>(obj.agents())) *
                    (x0 - result.reference.x_star).norm();

  for (const MethodSpec& spec : cfg.methods) {
    MethodOutcome outcome;
    outcome.label = derived_label(spec);
    outcome.name = spec.name;
    outcome.gamma = spec.gamma;
    outcome.alpha = spec.alpha;
    outcome.iterations = spec.iterations;
    try {
      if (spec.name == "exact") {
        outcome.trajectory =
            exact_projected_gd(obj, result.constants, x0, spec.iterations,
                               result.reference, spec.gamma);
      } else if (spec.name == "proj-gd" || spec.name == "accelerated") {
        SolverConfig sc;
        sc.gamma = spec.gamma;
        sc.inner = spec.inner;
        sc.seed = cfg.seed;
        sc.ambient_constants = spec.ambient_constants;
        if (sc.inner.kind == InnerMode::Kind::AccuracyDriven && sc.inner.eps1 <= 0.0)
          sc.inner.eps1 = epsilon1_for_target(cfg.target_eps, result.constants.n,
                                              result.constants.mu_f,
                                              result.constants.L_max);
        sc.outer_iterations = spec.iterations;
        if (sc.outer_iterations == 0 && spec.name == "proj-gd" &&
            sc.inner.kind == InnerMode::Kind::AccuracyDriven)
          sc.outer_iterations =
              r0 > 0.0 ? outer_iteration_count(cfg.target_eps, r0, result.constants)
                       : 0;
        outcome.eps1 = sc.inner.kind == InnerMode::Kind::AccuracyDriven
                           ? sc.inner.eps1
                           : 0.0;
        outcome.iterations = sc.outer_iterations;
        outcome.trajectory =
            spec.name == "proj-gd"
                ? decentralized_projected_gd(obj, result.constants, schedule, stats,
                                             x0, sc, result.reference)
                : accelerated_projected_gd(obj, result.constants, schedule, stats,
                                           x0, sc, result.reference);
      } else {  // diging | extra
        double alpha = spec.alpha;
        if (alpha <= 0.0) {
          const int probe = std::max(50, std::min(spec.iterations, 300));
          alpha = tune_baseline_alpha(spec.name, obj, schedule, stats,
                                      result.constants, x0, probe,
                                      result.reference);
        }
        outcome.alpha = alpha;
        outcome.trajectory =
            spec.name == "diging"
                ? diging(obj, schedule, x0, alpha, spec.iterations, result.reference)
                : extra(obj, schedule, x0, alpha, spec.iterations, result.reference);
      }
      outcome.trajectory.method = outcome.label;
      outcome.ok = true;
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.error = e.what();
    }
    result.outcomes.push_back(std::move(outcome));
  }

  const std::filesystem::path base(cfg.output);
  if (base.has_parent_path())
    std::filesystem::create_directories(base.parent_path());
  result.csv_path = cfg.output + ".csv";
  result.manifest_path = cfg.output + ".manifest.json";
  write_csv(result.csv_path, result.outcomes);

  ordered_json manifest;
  manifest["seed"] = cfg.seed;
  manifest["target_eps"] = cfg.target_eps;
  manifest["output"] = cfg.output;
  manifest["x0"] = cfg.x0;

  ordered_json jobj;
  jobj["kind"] = cfg.objective.kind;
  if (cfg.objective.kind == "quadratic") {
    jobj["n"] = cfg.objective.n;
    jobj["alpha"] = cfg.objective.alpha;
    jobj["dim"] = cfg.objective.dim < 0 ? cfg.objective.n : cfg.objective.dim;
  } else {
    jobj["dataset"] = cfg.objective.dataset;
    jobj["lambda"] = built.lambda_used > 0.0 ? built.lambda_used : cfg.objective.lambda;
    jobj["partition"] =
        cfg.objective.partition == PartitionMode::Contiguous ? "contiguous" : "shuffled";
    jobj["partition_seed"] = cfg.objective.partition_seed;
  }
  manifest["objective"] = jobj;

  ordered_json jtopo;
  jtopo["kind"] = cfg.topology.kind;
  jtopo["n"] = cfg.topology.n;
  jtopo["seed"] = cfg.topology.seed;
  jtopo["window"] = cfg.topology.window;
  if (!cfg.topology.graph.empty()) jtopo["graph"] = cfg.topology.graph;
  if (!cfg.topology.graphs_file.empty()) jtopo["graphs_file"] = cfg.topology.graphs_file;
  if (cfg.topology.kind == "random-gilbert") {
    jtopo["p"] = cfg.topology.p;
    jtopo["period"] = cfg.topology.period;
  }
  jtopo["verify_horizon"] = horizon;
  jtopo["delta_hat"] = result.topology_report.delta_hat;
  jtopo["max_residual"] = result.topology_report.max_residual;
  jtopo["sparsity_violations"] = result.topology_report.sparsity_violation_count;
  jtopo["assumption_pass"] = result.topology_report.pass;
  manifest["topology"] = jtopo;

  ordered_json jconst;
  jconst["mu_f"] = result.constants.mu_f;
  jconst["L_f"] = result.constants.L_f;
  jconst["mu_min"] = result.constants.mu_min;
  jconst["L_max"] = result.constants.L_max;
  jconst["n"] = result.constants.n;
  jconst["mu_hat"] = result.constants.mu_hat();
  jconst["L_hat"] = result.constants.L_hat();
  jconst["kappa_f"] = result.constants.kappa_f();
  manifest["constants"] = jconst;

  ordered_json jref;
  jref["f_star"] = result.reference.f_star;
  jref["grad_norm_at_star"] = result.reference.grad_norm_at_star;
  jref["x_star_norm"] = result.reference.x_star.norm();
  jref["tol"] = cfg.reference_tol;
  manifest["reference"] = jref;
  manifest["r0"] = r0;

  ordered_json jmethods = ordered_json::array();
  for (const MethodOutcome& o : result.outcomes) {
    ordered_json jm;
    jm["label"] = o.label;
    jm["name"] = o.name;
    jm["ok"] = o.ok;
    if (!o.ok) jm["error"] = o.error;
    jm["gamma"] = o.gamma;
    jm["alpha"] = o.alpha;
    jm["eps1"] = o.eps1;
    jm["iterations"] = o.iterations;
    if (o.ok && !o.trajectory.records.empty()) {
      const TrajectoryRecord& last = o.trajectory.back();
      jm["final_fgap"] = last.fgap;
      jm["final_dist_sq_to_opt"] = last.dist_sq_to_opt;
      jm["total_comms"] = last.comms;
      jm["total_grads"] = last.grads;
    }
    if (o.ok && o.eps1 > 0.0 && r0 > 0.0) {
      const AccuracyBudget budget =
          communication_budget(cfg.target_eps, r0, result.constants, stats,
                          result.reference.grad_norm_at_star);
      ordered_json jb;
      jb["eps"] = budget.eps;
      jb["eps1"] = budget.eps1;
      jb["N_outer"] = budget.N_outer;
      jb["m_inner"] = budget.m_inner;
      jb["total_comm"] = budget.total_comm;
      jm["budget"] = jb;
    }
    jmethods.push_back(std::move(jm));
  }
  manifest["methods"] = jmethods;

  std::ofstream mout(result.manifest_path, std::ios::binary);
  if (!mout)
    throw std::runtime_error("run_experiment: cannot write " + result.manifest_path);
  mout << manifest.dump(2) << '\n';

  return result;
}

}  // namespace tvopt
