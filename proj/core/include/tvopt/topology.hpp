#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tvopt {

/// Undirected communication graph on n agents. Nodes are 0-indexed,
/// self-loops are rejected, edges are stored normalized (i < j) and unique.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;

  Graph() = default;
  Graph(int n_agents, std::vector<std::pair<int, int>> edge_list);

  static Graph empty(int n_agents);
  static Graph complete(int n_agents);
  static Graph path(int n_agents);
  static Graph ring(int n_agents);
  static Graph star(int n_agents);

  std::vector<int> degrees() const;
  bool has_edge(int i, int j) const;
  bool connected() const;
};

/// Edge-set union over graphs that share the same node count.
Graph graph_union(const std::vector<Graph>& graphs);

/// Parses a graph-list file: one "i j" edge per line, graphs separated by a
/// blank line, 0-indexed nodes. The node count is not part of the format and
/// must be supplied.
std::vector<Graph> load_graph_list(const std::string& path, int n_agents);

/// Metropolis weights for one graph:
///   W_ij = 1 / (1 + max(deg_i, deg_j)) on edges,
///   W_ii = 1 - sum_{j != i} W_ij, zero elsewhere.
/// The result is symmetric, doubly stochastic and nonnegative; isolated
/// nodes get identity rows.
Eigen::MatrixXd metropolis_weights(const Graph& g);

/// max over rows and columns of |sum - 1|.
double stochasticity_residual(const Eigen::MatrixXd& w);

bool is_doubly_stochastic(const Eigen::MatrixXd& w, double tol = 1e-12);

/// Number of entries W_ij != 0 with i != j and (i, j) not an edge of g.
std::int64_t sparsity_violations(const Eigen::MatrixXd& w, const Graph& g);

/// Time-varying mixing matrix source: step index k >= 0 maps to a graph and
/// its Metropolis matrix W(k). Deterministic in (seed, k), immutable after
/// construction and safe to read from multiple threads.
class MixingSchedule {
 public:
  enum class Kind { Fixed, Alternating, RandomGilbert };

  /// One graph forever. The graph may be disconnected; verify_assumption
  /// will report delta_hat = 1 in that case.
  static MixingSchedule fixed(Graph g, int window = 1);

  /// Cycles through the list: step k uses graphs[k mod L]. Rejects lists
  /// whose unions over `window` consecutive steps are not all connected.
  static MixingSchedule alternating(std::vector<Graph> graphs, int window);

  /// Redraws a Gilbert G(n, p) graph every `period` steps from the seeded
  /// stream, retrying any draw that would leave some union of `window`
  /// consecutive step graphs disconnected.
  static MixingSchedule random_gilbert(int n, double edge_prob, int period,
                                       int window, std::uint64_t seed);

  Kind kind() const { return kind_; }
  int size() const { return n_; }
  int window() const { return window_; }
  std::uint64_t seed() const { return seed_; }

  const Graph& graph_at(std::int64_t k) const;
  const Eigen::MatrixXd& matrix_at(std::int64_t k) const;

 private:
  MixingSchedule() = default;

  struct Entry {
    Graph graph;
    Eigen::MatrixXd weights;
  };

  // Lazily generated epochs of the random kind. Epochs are drawn strictly
  // in order from one stream, so any (seed, k) pair replays identically.
  struct LazyState {
    std::mutex mu;
    std::mt19937_64 stream;
    std::deque<Entry> epochs;
  };

  const Entry& entry_at(std::int64_t k) const;
  void generate_next_epoch() const;
  bool window_unions_connected(std::int64_t epoch, const Graph& candidate) const;

  Kind kind_ = Kind::Fixed;
  int n_ = 0;
  int window_ = 1;
  std::uint64_t seed_ = 0;
  double edge_prob_ = 0.0;
  int period_ = 1;
  std::vector<Entry> base_;
  std::unique_ptr<LazyState> lazy_;
};

/// Construction parameters for build_schedule; only the fields of the chosen
/// kind are read.
struct ScheduleSpec {
  std::string kind = "fixed";  // fixed | alternating | random-gilbert
  int n = 0;
  std::uint64_t seed = 0;
  int window = 1;
  Graph fixed_graph;                   // fixed
  std::vector<Graph> alternating;      // alternating
  double edge_prob = 0.5;              // random-gilbert
  int period = 1;                      // random-gilbert
};

MixingSchedule build_schedule(const ScheduleSpec& spec);

/// W_b(k) = W(k) W(k-1) ... W(k-b+1); W_0(k) = I. Requires k >= b-1.
Eigen::MatrixXd window_product(const MixingSchedule& s, std::int64_t k, int b);

/// Largest singular value of Wb - (1/n) 11^T.
double window_delta(const Eigen::MatrixXd& wb);

/// Contraction data consumed by the solvers and budget formulas.
struct ScheduleStats {
  int window = 1;
  double delta_hat = 0.0;
};

struct AssumptionReport {
  int n = 0;
  int window = 1;
  std::int64_t horizon = 0;
  /// delta_hat = max over k in [window-1, horizon) of
  /// window_delta(window_product(s, k, window)).
  double delta_hat = 0.0;
  std::vector<double> step_residuals;
  double max_residual = 0.0;
  std::int64_t sparsity_violation_count = 0;
  bool pass = false;

  ScheduleStats stats() const { return {window, delta_hat}; }
};

/// Empirically checks the mixing-matrix assumption over a finite horizon.
/// Violations are reported, never thrown. pass requires delta_hat < 1 and
/// all double-stochasticity residuals <= 1e-10.
AssumptionReport verify_assumption(const MixingSchedule& s, int window,
                                   std::int64_t horizon);

}  // namespace tvopt
