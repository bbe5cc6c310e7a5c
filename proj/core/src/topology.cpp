#include "tvopt/topology.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

namespace tvopt {

namespace {

double uniform01(std::mt19937_64& stream) {
  return static_cast<double>(stream() >> 11) * 0x1.0p-53;
}

}  // namespace

Graph::Graph(int n_agents, std::vector<std::pair<int, int>> edge_list) : n(n_agents) {
  if (n < 1) throw std::invalid_argument("Graph: need at least one node");
  edges.reserve(edge_list.size());
  for (auto [i, j] : edge_list) {
    if (i == j) throw std::invalid_argument("Graph: self-loop rejected");
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw std::invalid_argument("Graph: endpoint out of range");
    if (i > j) std::swap(i, j);
    edges.emplace_back(i, j);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

Graph Graph::empty(int n_agents) { return Graph(n_agents, {}); }

Graph Graph::complete(int n_agents) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n_agents; ++i)
    for (int j = i + 1; j < n_agents; ++j) e.emplace_back(i, j);
  return Graph(n_agents, std::move(e));
}

Graph Graph::path(int n_agents) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n_agents; ++i) e.emplace_back(i, i + 1);
  return Graph(n_agents, std::move(e));
}

Graph Graph::ring(int n_agents) {
  Graph g = path(n_agents);
  if (n_agents >= 3) {
    g.edges.emplace_back(0, n_agents - 1);
    std::sort(g.edges.begin(), g.edges.end());
  }
  return g;
}

Graph Graph::star(int n_agents) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < n_agents; ++i) e.emplace_back(0, i);
  return Graph(n_agents, std::move(e));
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(n, 0);
  for (auto [i, j] : edges) {
    ++deg[i];
    ++deg[j];
  }
  return deg;
}

bool Graph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

bool Graph::connected() const {
  if (n <= 1) return true;
  std::vector<std::vector<int>> adj(n);
  for (auto [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

Graph graph_union(const std::vector<Graph>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("graph_union: empty list");
  const int n = graphs.front().n;
  std::vector<std::pair<int, int>> e;
  for (const Graph& g : graphs) {
    if (g.n != n) throw std::invalid_argument("graph_union: node counts differ");
    e.insert(e.end(), g.edges.begin(), g.edges.end());
  }
  return Graph(n, std::move(e));
}

std::vector<Graph> load_graph_list(const std::string& path, int n_agents) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_graph_list: cannot open " + path);

  std::vector<Graph> graphs;
  std::vector<std::pair<int, int>> block;
  bool in_block = false;
  std::string line;
  int lineno = 0;

  auto flush = [&] {
    if (in_block) {
      graphs.emplace_back(n_agents, block);
      block.clear();
      in_block = false;
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    int i = 0, j = 0;
    if (!(ls >> i)) {
      flush();  // blank (or whitespace-only) line separates blocks
      continue;
    }
    std::string tail;
    if (!(ls >> j) || (ls >> tail)) {
      throw std::runtime_error("load_graph_list: " + path + ":" +
                               std::to_string(lineno) + ": expected \"i j\"");
    }
    in_block = true;
    block.emplace_back(i, j);
  }
  flush();
  if (graphs.empty())
    throw std::runtime_error("load_graph_list: " + path + ": no graphs found");
  return graphs;
}

Eigen::MatrixXd metropolis_weights(const Graph& g) {
  const int n = g.n;
  if (n < 1) throw std::invalid_argument("metropolis_weights: empty graph");
  const std::vector<int> deg = g.degrees();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (auto [i, j] : g.edges) {
    const double wij = 1.0 / (1.0 + std::max(deg[i], deg[j]));
    w(i, j) = wij;
    w(j, i) = wij;
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return w;
}

double stochasticity_residual(const Eigen::MatrixXd& w) {
  const double row = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double col = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(row, col);
}

bool is_doubly_stochastic(const Eigen::MatrixXd& w, double tol) {
  return w.rows() == w.cols() && stochasticity_residual(w) <= tol;
}

std::int64_t sparsity_violations(const Eigen::MatrixXd& w, const Graph& g) {
  std::int64_t count = 0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (i != j && w(i, j) != 0.0 && !g.has_edge(i, j)) ++count;
  return count;
}

MixingSchedule MixingSchedule::fixed(Graph g, int window) {
  if (g.n < 2) throw std::invalid_argument("MixingSchedule: need n >= 2");
  if (window < 1) throw std::invalid_argument("MixingSchedule: window >= 1");
  MixingSchedule s;
  s.kind_ = Kind::Fixed;
  s.n_ = g.n;
  s.window_ = window;
  Eigen::MatrixXd w = metropolis_weights(g);
  s.base_.push_back({std::move(g), std::move(w)});
  return s;
}

MixingSchedule MixingSchedule::alternating(std::vector<Graph> graphs, int window) {
  if (graphs.empty()) throw std::invalid_argument("MixingSchedule: empty graph list");
  const int n = graphs.front().n;
  if (n < 2) throw std::invalid_argument("MixingSchedule: need n >= 2");
  if (window < 1) throw std::invalid_argument("MixingSchedule: window >= 1");
  for (const Graph& g : graphs)
    if (g.n != n) throw std::invalid_argument("MixingSchedule: node counts differ");

  // Every union of `window` consecutive step graphs must be connected. The
  // list cycles with period L, so there are at most L distinct windows.
  const int len = static_cast<int>(graphs.size());
  for (int k = window - 1; k < window - 1 + len; ++k) {
    std::vector<Graph> win;
    for (int b = 0; b < window; ++b) win.push_back(graphs[(k - b) % len]);
    if (!graph_union(win).connected())
      throw std::invalid_argument(
          "MixingSchedule: union of " + std::to_string(window) +
          " consecutive graphs is disconnected (window ending at step " +
          std::to_string(k) + " mod " + std::to_string(len) + ")");
  }

  MixingSchedule s;
  s.kind_ = Kind::Alternating;
  s.n_ = n;
  s.window_ = window;
  for (Graph& g : graphs) {
    Eigen::MatrixXd w = metropolis_weights(g);
    s.base_.push_back({std::move(g), std::move(w)});
  }
  return s;
}

MixingSchedule MixingSchedule::random_gilbert(int n, double edge_prob, int period,
                                              int window, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("MixingSchedule: need n >= 2");
  if (!(edge_prob > 0.0 && edge_prob <= 1.0))
    throw std::invalid_argument("MixingSchedule: edge probability must be in (0, 1]");
  if (period < 1) throw std::invalid_argument("MixingSchedule: period >= 1");
  if (window < 1) throw std::invalid_argument("MixingSchedule: window >= 1");
  MixingSchedule s;
  s.kind_ = Kind::RandomGilbert;
  s.n_ = n;
  s.window_ = window;
  s.seed_ = seed;
  s.edge_prob_ = edge_prob;
  s.period_ = period;
  s.lazy_ = std::make_unique<LazyState>();
  s.lazy_->stream.seed(seed);
  return s;
}

const Graph& MixingSchedule::graph_at(std::int64_t k) const { return entry_at(k).graph; }

const Eigen::MatrixXd& MixingSchedule::matrix_at(std::int64_t k) const {
  return entry_at(k).weights;
}

const MixingSchedule::Entry& MixingSchedule::entry_at(std::int64_t k) const {
  if (k < 0) throw std::invalid_argument("MixingSchedule: step index must be >= 0");
  switch (kind_) {
    case Kind::Fixed:
      return base_.front();
    case Kind::Alternating:
      return base_[static_cast<std::size_t>(k % static_cast<std::int64_t>(base_.size()))];
    case Kind::RandomGilbert: {
      const std::int64_t epoch = k / period_;
      std::lock_guard<std::mutex> lock(lazy_->mu);
      while (static_cast<std::int64_t>(lazy_->epochs.size()) <= epoch)
        generate_next_epoch();
      return lazy_->epochs[static_cast<std::size_t>(epoch)];
    }
  }
  throw std::logic_error("MixingSchedule: bad kind");
}

bool MixingSchedule::window_unions_connected(std::int64_t epoch,
                                             const Graph& candidate) const {
  // Check every window [k-B+1, k] whose last step k lies in this epoch;
  // earlier epochs are already frozen. Once a window sits entirely inside
  // the epoch its union is the candidate alone, so one check suffices.
  const std::int64_t first = epoch * period_;
  const std::int64_t last = (epoch + 1) * period_ - 1;
  auto graph_at_step = [&](std::int64_t step) -> const Graph& {
    const std::int64_t e = step / period_;
    return e == epoch ? candidate : lazy_->epochs[static_cast<std::size_t>(e)].graph;
  };
  for (std::int64_t k = std::max<std::int64_t>(window_ - 1, first); k <= last; ++k) {
    std::vector<Graph> win;
    win.reserve(window_);
    for (int b = 0; b < window_; ++b) win.push_back(graph_at_step(k - b));
    if (!graph_union(win).connected()) return false;
    if (k - window_ + 1 >= first) break;  // interior window; later ones repeat
  }
  return true;
}

void MixingSchedule::generate_next_epoch() const {
  const std::int64_t epoch = static_cast<std::int64_t>(lazy_->epochs.size());
  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j)
        if (uniform01(lazy_->stream) < edge_prob_) edges.emplace_back(i, j);
    Graph g(n_, std::move(edges));
    if (window_unions_connected(epoch, g)) {
      Eigen::MatrixXd w = metropolis_weights(g);
      lazy_->epochs.push_back({std::move(g), std::move(w)});
      return;
    }
  }
  throw std::runtime_error(
      "MixingSchedule: could not draw a graph with connected window unions; "
      "raise edge probability or the window length");
}

MixingSchedule build_schedule(const ScheduleSpec& spec) {
  if (spec.kind == "fixed") return MixingSchedule::fixed(spec.fixed_graph, spec.window);
  if (spec.kind == "alternating")
    return MixingSchedule::alternating(spec.alternating, spec.window);
  if (spec.kind == "random-gilbert")
    return MixingSchedule::random_gilbert(spec.n, spec.edge_prob, spec.period,
                                          spec.window, spec.seed);
  throw std::invalid_argument("build_schedule: unknown kind '" + spec.kind + "'");
}

Eigen::MatrixXd window_product(const MixingSchedule& s, std::int64_t k, int b) {
  if (b < 0) throw std::invalid_argument("window_product: b must be >= 0");
  if (k < b - 1) throw std::invalid_argument("window_product: requires k >= b-1");
  const int n = s.size();
  if (b == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd prod = s.matrix_at(k);
  for (int i = 1; i < b; ++i) prod = prod * s.matrix_at(k - i);
  return prod;
}

double window_delta(const Eigen::MatrixXd& wb) {
  if (wb.rows() != wb.cols())
    throw std::invalid_argument("window_delta: matrix must be square");
  const auto n = wb.rows();
  const Eigen::MatrixXd deflated =
      wb - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  return Eigen::JacobiSVD<Eigen::MatrixXd>(deflated).singularValues()(0);
}

AssumptionReport verify_assumption(const MixingSchedule& s, int window,
                                   std::int64_t horizon) {
  if (window < 1) throw std::invalid_argument("verify_assumption: window >= 1");
  if (horizon < window)
    throw std::invalid_argument("verify_assumption: horizon must be >= window");

  AssumptionReport report;
  report.n = s.size();
  report.window = window;
  report.horizon = horizon;
  report.step_residuals.reserve(static_cast<std::size_t>(horizon));

  for (std::int64_t k = 0; k < horizon; ++k) {
    const Eigen::MatrixXd& w = s.matrix_at(k);
    report.step_residuals.push_back(stochasticity_residual(w));
    report.sparsity_violation_count += sparsity_violations(w, s.graph_at(k));
  }
  report.max_residual = 0.0;
  for (double r : report.step_residuals)
    report.max_residual = std::max(report.max_residual, r);

  report.delta_hat = 0.0;
  for (std::int64_t k = window - 1; k < horizon; ++k)
    report.delta_hat = std::max(report.delta_hat,
                                window_delta(window_product(s, k, window)));

  // the SVD of a non-mixing schedule lands within rounding of 1, so
  // delta_hat must clear 1 by a strict margin to count as contraction
  report.pass = report.delta_hat < 1.0 - 1e-12 && report.max_residual <= 1e-10;
  return report;
}

}  // namespace tvopt
