#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "tvopt/experiment.hpp"
#include "tvopt/libsvm.hpp"

using namespace tvopt;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path temp_file(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

ExperimentConfig small_quadratic_config(const std::string& tag) {
  ExperimentConfig cfg;
  cfg.seed = 7;
  cfg.target_eps = 1e-6;
  cfg.output = (fs::temp_directory_path() / tag).string();
  cfg.x0 = {1.0};
  cfg.objective.kind = "quadratic";
  cfg.objective.n = 6;
  cfg.objective.alpha = 0.5;
  cfg.topology.kind = "random-gilbert";
  cfg.topology.n = 6;
  cfg.topology.seed = 99;
  cfg.topology.seed_set = true;
  cfg.topology.window = 2;
  cfg.topology.p = 0.5;
  cfg.topology.period = 1;
  cfg.topology.verify_horizon = 2500;

  MethodSpec exact;
  exact.name = "exact";
  exact.iterations = 40;
  MethodSpec acc;
  acc.name = "proj-gd";
  acc.inner = InnerMode::accuracy_driven(0.0);  // derive from target_eps
  acc.iterations = 0;  // derive the worst-case count
  MethodSpec fixed;
  fixed.name = "proj-gd";
  fixed.inner = InnerMode::fixed_rounds(5);
  fixed.iterations = 40;
  MethodSpec accel;
  accel.name = "accelerated";
  accel.inner = InnerMode::fixed_rounds(5);
  accel.iterations = 40;
  MethodSpec dig;
  dig.name = "diging";
  dig.iterations = 300;
  cfg.methods = {exact, acc, fixed, accel, dig};
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("parse_libsvm handles the basic line format") {
  const LibsvmDataset ds = parse_libsvm_text("+1 1:0.5 3:-2\n-1 2:1.5\n");
  REQUIRE(ds.size() == 2);
  CHECK(ds.labels == LibsvmDataset::Labels::PlusMinus);
  CHECK(ds.dim == 3);
  CHECK(ds.rows[0].label == 1.0);
  CHECK(ds.rows[0].features ==
        std::vector<std::pair<int, double>>{{0, 0.5}, {2, -2.0}});
  CHECK(ds.rows[1].features == std::vector<std::pair<int, double>>{{1, 1.5}});
}

TEST_CASE("parse_libsvm infers the {0,1} convention") {
  const LibsvmDataset ds = parse_libsvm_text("0 2:1\n1 1:3\n");
  CHECK(ds.labels == LibsvmDataset::Labels::ZeroOne);
  CHECK(ds.rows[0].label == 0.0);
}

TEST_CASE("parse_libsvm rejects malformed tokens with a line number") {
  CHECK_THROWS_WITH_AS(parse_libsvm_text("1 a:b\n"),
                       doctest::Contains("1: bad token 'a:b'"), ParseError);
  CHECK_THROWS_WITH_AS(parse_libsvm_text("+1 1:0.5\n2 1:1\n"),
                       doctest::Contains(":2"), ParseError);
  CHECK_THROWS_WITH_AS(parse_libsvm_text("1 0:2\n"),
                       doctest::Contains("index"), ParseError);
}

TEST_CASE("parse_libsvm rejects duplicate indices") {
  CHECK_THROWS_WITH_AS(parse_libsvm_text("+1 2:1 2:3\n"),
                       doctest::Contains("duplicate feature index 2"), ParseError);
}

TEST_CASE("parse_libsvm rejects mixed conventions and empty input") {
  CHECK_THROWS_AS(parse_libsvm_text("0 1:1\n-1 1:1\n"), ParseError);
  CHECK_THROWS_AS(parse_libsvm_text("\n\n"), ParseError);
}

TEST_CASE("parse_libsvm tolerates unsorted indices and odd whitespace") {
  const LibsvmDataset ds = parse_libsvm_text("  -1\t5:2  1:1 \n+1 2:0.25\n");
  CHECK(ds.rows[0].features ==
        std::vector<std::pair<int, double>>{{0, 1.0}, {4, 2.0}});
  CHECK(ds.dim == 5);
}

TEST_CASE("canonical serialization round-trips") {
  const LibsvmDataset ds =
      parse_libsvm_text("+1 3:0.1 1:-7\n-1 2:0.333333333333333314829616256247\n");
  const LibsvmDataset again = parse_libsvm_text(to_libsvm_text(ds));
  CHECK(ds == again);

  const LibsvmDataset zds = parse_libsvm_text("0 1:1\n1 2:4\n");
  CHECK(zds == parse_libsvm_text(to_libsvm_text(zds)));
}

TEST_CASE("partition sizes differ by at most one and preserve order") {
  const LibsvmDataset ds = parse_libsvm_text(
      "+1 1:0\n+1 1:1\n+1 1:2\n+1 1:3\n+1 1:4\n+1 1:5\n+1 1:6\n+1 1:7\n+1 1:8\n+1 1:9\n");
  const auto shards = partition_dataset(ds, 3, PartitionMode::Contiguous);
  REQUIRE(shards.size() == 3);
  CHECK(shards[0].features.rows() == 4);
  CHECK(shards[1].features.rows() == 3);
  CHECK(shards[2].features.rows() == 3);
  CHECK(shards[0].features(0, 0) == 0.0);
  CHECK(shards[1].features(0, 0) == 4.0);
  CHECK(shards[2].features(2, 0) == 9.0);
}

TEST_CASE("partition with n == m gives singletons in order") {
  const LibsvmDataset ds = parse_libsvm_text("+1 1:0\n+1 1:1\n+1 1:2\n");
  const auto shards = partition_dataset(ds, 3, PartitionMode::Contiguous);
  for (int i = 0; i < 3; ++i) {
    CHECK(shards[i].features.rows() == 1);
    CHECK(shards[i].features(0, 0) == static_cast<double>(i));
  }
}

TEST_CASE("shuffled partition is deterministic per seed and covers the data") {
  const LibsvmDataset ds = parse_libsvm_text(
      "+1 1:0\n+1 1:1\n+1 1:2\n+1 1:3\n+1 1:4\n+1 1:5\n+1 1:6\n+1 1:7\n+1 1:8\n+1 1:9\n");
  const auto a = partition_dataset(ds, 4, PartitionMode::Shuffled, 42);
  const auto b = partition_dataset(ds, 4, PartitionMode::Shuffled, 42);
  const auto c = partition_dataset(ds, 4, PartitionMode::Shuffled, 43);
  std::vector<double> seen_a, seen_c;
  bool identical_ab = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    identical_ab = identical_ab &&
                   (a[i].features - b[i].features).cwiseAbs().maxCoeff() == 0.0;
    for (Eigen::Index r = 0; r < a[i].features.rows(); ++r)
      seen_a.push_back(a[i].features(r, 0));
    for (Eigen::Index r = 0; r < c[i].features.rows(); ++r)
      seen_c.push_back(c[i].features(r, 0));
  }
  CHECK(identical_ab);
  std::sort(seen_a.begin(), seen_a.end());
  CHECK(seen_a == std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(seen_a != seen_c);  // different permutation before the sort
  std::sort(seen_c.begin(), seen_c.end());
  CHECK(seen_a == seen_c);  // same coverage
}

TEST_CASE("partition rejects more agents than samples") {
  const LibsvmDataset ds = parse_libsvm_text("+1 1:0\n+1 1:1\n");
  CHECK_THROWS_AS(partition_dataset(ds, 3, PartitionMode::Contiguous),
                  std::invalid_argument);
}

TEST_CASE("solve_reference returns the analytic quadratic optimum") {
  const auto obj = quadratic_family(5, 0.2);
  const ReferenceSolution ref = solve_reference(*obj, obj->spectral_constants());
  CHECK(ref.x_star.norm() == 0.0);
  CHECK(ref.f_star == 0.0);
  CHECK(ref.grad_norm_at_star == 0.0);
}

TEST_CASE("solve_reference finds a bias-only logistic optimum") {
  // two samples (+e1, +1) and (-e1, +1): symmetry forces w = 0, bias > 0
  DataShard shard;
  shard.features = Eigen::MatrixXd(2, 1);
  shard.features << 1, -1;
  shard.labels = Eigen::VectorXd::Constant(2, 1.0);
  const auto obj = logistic_objective({shard}, 0.1);
  const SpectralConstants c = estimate_constants(*obj);
  const ReferenceSolution ref = solve_reference(*obj, c, 1e-12);

  CHECK(std::abs(ref.x_star(0)) <= 1e-9);
  CHECK(ref.x_star(1) > 0.1);
  const Eigen::VectorXd g = obj->f_gradient(ref.x_star);
  CHECK(g.norm() <= 1e-12 * (1.0 + ref.x_star.norm()));

  // stacked norm equals the per-agent recomputation
  double sum_sq = 0.0;
  for (int i = 0; i < obj->agents(); ++i)
    sum_sq += obj->gradient(i, ref.x_star).squaredNorm();
  CHECK(ref.grad_norm_at_star == doctest::Approx(std::sqrt(sum_sq)).epsilon(1e-12));
}

TEST_CASE("solve_reference reports an exceeded iteration cap") {
  const auto obj = logistic_objective(
      tvopt_test::synthetic_logistic_shards(2, 20, 3, 3), 0.05);
  CHECK_THROWS_AS(solve_reference(*obj, estimate_constants(*obj), 1e-12, 3),
                  std::runtime_error);
}

TEST_CASE("run_experiment writes the CSV schema and manifest") {
  const ExperimentConfig cfg = small_quadratic_config("tvopt_exp1");
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.outcomes.size() == 5);
  for (const MethodOutcome& o : res.outcomes) CHECK(o.ok);

  const std::string csv = slurp(res.csv_path);
  CHECK(csv.rfind("method,k,comms,grads,fgap,dist_sq_to_opt,dist_to_consensus,r_k\n", 0) == 0);
  for (const char* label : {"exact", "proj-gd-acc", "proj-gd-5", "accel-5", "diging"})
    CHECK(csv.find(label) != std::string::npos);

  const std::string manifest = slurp(res.manifest_path);
  for (const char* key :
       {"\"seed\"", "\"target_eps\"", "\"delta_hat\"", "\"window\"", "\"gamma\"",
        "\"alpha\"", "\"eps1\"", "\"iterations\"", "\"mu_f\"", "\"L_max\"",
        "\"budget\"", "\"r0\""}) {
    CAPTURE(key);
    CHECK(manifest.find(key) != std::string::npos);
  }

  // no method beats the reference
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    const auto p1 = line.find(',');
    auto pos = line.find(',', p1 + 1);
    pos = line.find(',', pos + 1);
    pos = line.find(',', pos + 1);
    const auto end = line.find(',', pos + 1);
    const double fgap = std::stod(line.substr(pos + 1, end - pos - 1));
    CHECK(fgap >= -1e-12);
  }

  fs::remove(res.csv_path);
  fs::remove(res.manifest_path);
}

TEST_CASE("run_experiment is byte-deterministic") {
  ExperimentConfig cfg = small_quadratic_config("tvopt_exp_det_a");
  const ExperimentResult a = run_experiment(cfg);
  cfg.output = (fs::temp_directory_path() / "tvopt_exp_det_b").string();
  const ExperimentResult b = run_experiment(cfg);
  CHECK(slurp(a.csv_path) == slurp(b.csv_path));
  fs::remove(a.csv_path);
  fs::remove(a.manifest_path);
  fs::remove(b.csv_path);
  fs::remove(b.manifest_path);
}

TEST_CASE("record count per method is iterations + 1") {
  ExperimentConfig cfg = small_quadratic_config("tvopt_exp_rows");
  cfg.methods.resize(1);  // exact, 40 iterations
  const ExperimentResult res = run_experiment(cfg);
  CHECK(res.outcomes[0].trajectory.records.size() == 41);
  fs::remove(res.csv_path);
  fs::remove(res.manifest_path);
}

TEST_CASE("a failing method is isolated from the rest") {
  ExperimentConfig cfg = small_quadratic_config("tvopt_exp_fail");
  cfg.objective.n = 2;
  cfg.topology.n = 2;
  cfg.topology.kind = "fixed";
  cfg.topology.graph = "empty";  // delta_hat = 1: accuracy methods must fail
  cfg.topology.verify_horizon = 4;
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.outcomes.size() == 5);
  CHECK(res.outcomes[0].ok);        // exact never talks to the network
  CHECK_FALSE(res.outcomes[1].ok);  // accuracy-driven proj-gd
  CHECK(!res.outcomes[1].error.empty());
  CHECK_FALSE(res.all_failed());
  const std::string csv = slurp(res.csv_path);
  CHECK(csv.find("exact") != std::string::npos);
  CHECK(csv.find("proj-gd-acc") == std::string::npos);
  fs::remove(res.csv_path);
  fs::remove(res.manifest_path);
}

TEST_CASE("load_config validates and reports schema errors") {
  const fs::path good = temp_file("tvopt_cfg_good.json", R"({
    "seed": 3,
    "target_eps": 1e-4,
    "output": "out/test",
    "objective": {"kind": "quadratic", "n": 4, "alpha": 0.5},
    "topology": {"kind": "fixed", "n": 4, "graph": "ring"},
    "methods": [{"name": "exact", "iterations": 10}]
  })");
  const ExperimentConfig cfg = load_config(good.string());
  CHECK(cfg.objective.alpha == 0.5);
  CHECK(cfg.topology.graph == "ring");
  fs::remove(good);

  const fs::path missing = temp_file("tvopt_cfg_missing.json", R"({
    "seed": 3, "output": "x",
    "objective": {"kind": "quadratic", "n": 4, "alpha": 0.5},
    "topology": {"kind": "fixed", "n": 4, "graph": "ring"},
    "methods": [{"name": "exact", "iterations": 10}]
  })");
  CHECK_THROWS_WITH_AS(load_config(missing.string()),
                       doctest::Contains("target_eps"), ConfigError);
  fs::remove(missing);

  const fs::path bad_seed = temp_file("tvopt_cfg_seed.json", R"({
    "seed": 3, "target_eps": 1e-4, "output": "x",
    "objective": {"kind": "quadratic", "n": 4, "alpha": 0.5},
    "topology": {"kind": "random-gilbert", "n": 4, "p": 0.5},
    "methods": [{"name": "exact", "iterations": 10}]
  })");
  CHECK_THROWS_WITH_AS(load_config(bad_seed.string()),
                       doctest::Contains("seed"), ConfigError);
  fs::remove(bad_seed);

  const fs::path two_inner = temp_file("tvopt_cfg_inner.json", R"({
    "seed": 3, "target_eps": 1e-4, "output": "x",
    "objective": {"kind": "quadratic", "n": 4, "alpha": 0.5},
    "topology": {"kind": "fixed", "n": 4, "graph": "ring"},
    "methods": [{"name": "proj-gd", "rounds": 2, "accuracy": true, "iterations": 5}]
  })");
  CHECK_THROWS_AS(load_config(two_inner.string()), ConfigError);
  fs::remove(two_inner);

  CHECK_THROWS_AS(load_config("/nonexistent/tvopt.json"), ConfigError);
}

TEST_CASE("run_experiment drives the logistic path with the default lambda rule") {
  const fs::path data = temp_file("tvopt_exp_logi.libsvm",
                                  "+1 1:0.5 2:-1\n-1 1:-0.25 3:2\n+1 2:1\n"
                                  "-1 3:-0.5\n+1 1:1 3:0.75\n-1 2:-2\n"
                                  "+1 1:0.1\n-1 2:0.6 3:-1.5\n+1 3:0.4\n");
  ExperimentConfig cfg;
  cfg.seed = 5;
  cfg.target_eps = 1e-4;
  cfg.output = (fs::temp_directory_path() / "tvopt_exp_logi").string();
  cfg.objective.kind = "logistic";
  cfg.objective.dataset = data.string();
  cfg.objective.lambda = -1.0;  // default rule
  cfg.objective.partition = PartitionMode::Shuffled;
  cfg.objective.partition_seed = 3;
  cfg.objective.partition_seed_set = true;
  cfg.topology.kind = "fixed";
  cfg.topology.n = 3;
  cfg.topology.graph = "ring";
  MethodSpec exact;
  exact.name = "exact";
  exact.iterations = 20;
  MethodSpec fixed;
  fixed.name = "proj-gd";
  fixed.inner = InnerMode::fixed_rounds(2);
  fixed.iterations = 20;
  cfg.methods = {exact, fixed};

  const ExperimentResult res = run_experiment(cfg);
  for (const MethodOutcome& o : res.outcomes) {
    CAPTURE(o.error);
    CHECK(o.ok);
  }
  CHECK(res.constants.mu_f > 0.0);  // default lambda kicked in
  const std::string manifest = slurp(res.manifest_path);
  for (const char* key : {"\"dataset\"", "\"lambda\"", "\"partition\"",
                          "\"partition_seed\""}) {
    CAPTURE(key);
    CHECK(manifest.find(key) != std::string::npos);
  }
  fs::remove(data);
  fs::remove(res.csv_path);
  fs::remove(res.manifest_path);
}

TEST_CASE("quadratic objective must match the topology size") {
  ExperimentConfig cfg = small_quadratic_config("tvopt_exp_mismatch");
  cfg.objective.n = 5;
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_SUITE_END();
