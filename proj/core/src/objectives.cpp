#include "tvopt/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tvopt/rng.hpp"

namespace tvopt {

namespace {

/// log(1 + exp(t)) without overflow.
double softplus(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

/// 1 / (1 + exp(-t)).
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

constexpr double kPowerIterTol = 1e-8;

/// Largest eigenvalue of the symmetric PSD matrix S by power iteration.
/// Runs until the eigen-residual ||S v - lambda v|| drops below
/// kPowerIterTol * lambda and returns lambda + residual, which upper-bounds
/// the top eigenvalue once the iteration has locked onto it (the Rayleigh
/// quotient sits within one residual norm of an eigenvalue).
double top_eigenvalue_bound(const Eigen::MatrixXd& s) {
  const auto d = s.rows();
  if (d == 0) return 0.0;
  Rng rng(0x5eed5eed5eed5eedULL);
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.uniform(-1.0, 1.0);
  v.normalize();
  double lambda = 0.0;
  double residual = 0.0;
  for (int iter = 0; iter < 200000; ++iter) {
    const Eigen::VectorXd sv = s * v;
    lambda = v.dot(sv);
    residual = (sv - lambda * v).norm();
    const double norm = sv.norm();
    if (norm == 0.0) return 0.0;
    if (residual <= kPowerIterTol * std::abs(lambda)) break;
    v = sv / norm;
  }
  return std::max(lambda + residual, 0.0);
}

/// sigma_max(A)^2 as a certified upper bound.
double spectral_norm_sq_bound(const Eigen::MatrixXd& a) {
  return top_eigenvalue_bound(a.transpose() * a);
}

double map_label(double raw) {
  if (raw == 1.0) return 1.0;
  if (raw == 0.0 || raw == -1.0) return -1.0;
  throw std::invalid_argument("logistic_objective: label outside {0,1}/{-1,+1}");
}

}  // namespace

void SpectralConstants::validate() const {
  if (!(mu_f > 0.0)) throw std::invalid_argument("SpectralConstants: mu_f must be > 0");
  if (!(mu_f <= L_f)) throw std::invalid_argument("SpectralConstants: need mu_f <= L_f");
  if (!(mu_min <= L_max))
    throw std::invalid_argument("SpectralConstants: need mu_min <= L_max");
  if (n < 1) throw std::invalid_argument("SpectralConstants: n must be >= 1");
}

SpectralConstants LocalObjective::spectral_constants() const {
  throw std::logic_error("LocalObjective: no analytic constants for this family");
}

double LocalObjective::f_value(const Eigen::VectorXd& x) const {
  double total = 0.0;
  for (int i = 0; i < agents(); ++i) total += value(i, x);
  return total;
}

Eigen::VectorXd LocalObjective::f_gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dimension());
  for (int i = 0; i < agents(); ++i) g += gradient(i, x);
  return g;
}

double LocalObjective::stacked_value(const Eigen::MatrixXd& x) const {
  double total = 0.0;
  for (int i = 0; i < agents(); ++i) total += value(i, x.col(i));
  return total;
}

Eigen::MatrixXd LocalObjective::stacked_gradient(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd g(dimension(), agents());
  for (int i = 0; i < agents(); ++i) g.col(i) = gradient(i, x.col(i));
  return g;
}

QuadraticFamily::QuadraticFamily(int n_agents, double alpha, int dim)
    : n_(n_agents), d_(dim), alpha_(alpha) {
  if (n_ < 1) throw std::invalid_argument("quadratic_family: n must be >= 1");
  if (!(alpha_ > 0.0)) throw std::invalid_argument("quadratic_family: alpha must be > 0");
  if (d_ < n_) throw std::invalid_argument("quadratic_family: dim must be >= n");
}

double QuadraticFamily::value(int agent, const Eigen::VectorXd& x) const {
  const double xi = x(agent);
  return 0.5 * xi * xi + 0.5 * (alpha_ / n_) * x.squaredNorm();
}

Eigen::VectorXd QuadraticFamily::gradient(int agent, const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = (alpha_ / n_) * x;
  g(agent) += x(agent);
  return g;
}

SpectralConstants QuadraticFamily::spectral_constants() const {
  SpectralConstants c;
  // Hessian of f has eigenvalue 1 + alpha on the first n coordinates and
  // alpha on any extra ones, so mu_f drops to alpha only when dim > n.
  c.mu_f = d_ == n_ ? 1.0 + alpha_ : alpha_;
  c.L_f = 1.0 + alpha_;
  c.mu_min = alpha_ / n_;
  c.L_max = 1.0 + alpha_ / n_;
  c.n = n_;
  c.validate();
  return c;
}

bool QuadraticFamily::analytic_optimum(Eigen::VectorXd& x_star) const {
  x_star = Eigen::VectorXd::Zero(d_);
  return true;
}

LogisticObjective::LogisticObjective(const std::vector<DataShard>& shards,
                                     double lambda)
    : lambda_(lambda), n_(static_cast<int>(shards.size())) {
  if (shards.empty()) throw std::invalid_argument("logistic_objective: no shards");
  if (lambda_ < 0.0)
    throw std::invalid_argument("logistic_objective: lambda must be >= 0");

  const auto raw_dim = shards.front().features.cols();
  d_ = static_cast<int>(raw_dim) + 1;  // trailing bias coordinate
  shards_.reserve(shards.size());
  for (const DataShard& shard : shards) {
    if (shard.features.rows() == 0)
      throw std::invalid_argument("logistic_objective: empty shard");
    if (shard.features.cols() != raw_dim)
      throw std::invalid_argument("logistic_objective: feature dimensions differ");
    if (shard.labels.size() != shard.features.rows())
      throw std::invalid_argument("logistic_objective: label count mismatch");

    AugmentedShard aug;
    aug.features.resize(shard.features.rows(), d_);
    aug.features.leftCols(raw_dim) = shard.features;
    aug.features.col(raw_dim).setOnes();
    aug.labels.resize(shard.labels.size());
    for (Eigen::Index j = 0; j < shard.labels.size(); ++j)
      aug.labels(j) = map_label(shard.labels(j));
    m_total_ += shard.features.rows();
    shards_.push_back(std::move(aug));
  }
}

double LogisticObjective::value(int agent, const Eigen::VectorXd& x) const {
  const AugmentedShard& shard = shards_[static_cast<std::size_t>(agent)];
  const Eigen::VectorXd z = shard.features * x;
  double loss = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j)
    loss += softplus(-shard.labels(j) * z(j));
  return loss / static_cast<double>(m_total_) +
         0.5 * (lambda_ / n_) * x.squaredNorm();
}

Eigen::VectorXd LogisticObjective::gradient(int agent, const Eigen::VectorXd& x) const {
  const AugmentedShard& shard = shards_[static_cast<std::size_t>(agent)];
  const Eigen::VectorXd z = shard.features * x;
  Eigen::VectorXd coeff(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double c = shard.labels(j);
    coeff(j) = -c * sigmoid(-c * z(j));
  }
  return shard.features.transpose() * coeff / static_cast<double>(m_total_) +
         (lambda_ / n_) * x;
}

double LogisticObjective::data_smoothness() const {
  Eigen::MatrixXd all(m_total_, d_);
  Eigen::Index row = 0;
  for (const AugmentedShard& shard : shards_) {
    all.middleRows(row, shard.features.rows()) = shard.features;
    row += shard.features.rows();
  }
  return spectral_norm_sq_bound(all) / (4.0 * static_cast<double>(m_total_));
}

SpectralConstants LogisticObjective::spectral_constants() const {
  if (lambda_ == 0.0)
    throw std::invalid_argument(
        "estimate_constants: logistic with lambda = 0 is not strongly convex");
  SpectralConstants c;
  c.n = n_;
  c.mu_f = lambda_;
  c.L_f = lambda_ + data_smoothness();
  c.mu_min = lambda_ / n_;
  c.L_max = 0.0;
  for (const AugmentedShard& shard : shards_) {
    const double li = lambda_ / n_ + spectral_norm_sq_bound(shard.features) /
                                         (4.0 * static_cast<double>(m_total_));
    c.L_max = std::max(c.L_max, li);
  }
  c.validate();
  return c;
}

std::unique_ptr<QuadraticFamily> quadratic_family(int n_agents, double alpha, int dim) {
  return std::make_unique<QuadraticFamily>(n_agents, alpha,
                                           dim < 0 ? n_agents : dim);
}

std::unique_ptr<LogisticObjective> logistic_objective(
    const std::vector<DataShard>& shards, double lambda) {
  return std::make_unique<LogisticObjective>(shards, lambda);
}

SpectralConstants estimate_constants(const LocalObjective& obj) {
  return obj.spectral_constants();
}

CoercivityReport coercivity_check(const LocalObjective& obj,
                                  const SpectralConstants& constants, int trials,
                                  std::uint64_t seed) {
  constants.validate();
  const int d = obj.dimension();
  Rng rng(seed);
  CoercivityReport report;
  report.trials = trials;
  report.worst_margin = std::numeric_limits<double>::infinity();
  const double mu = constants.mu_f;
  const double L = constants.L_f;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd x(d), y(d);
    for (int i = 0; i < d; ++i) x(i) = rng.gaussian();
    for (int i = 0; i < d; ++i) y(i) = rng.gaussian();
    const Eigen::VectorXd gdiff = obj.f_gradient(x) - obj.f_gradient(y);
    const Eigen::VectorXd xdiff = x - y;
    const double lhs = gdiff.dot(xdiff);
    const double rhs = mu * L / (mu + L) * xdiff.squaredNorm() +
                       gdiff.squaredNorm() / (mu + L);
    report.worst_margin = std::min(report.worst_margin, lhs - rhs);
  }
  report.pass = trials == 0 || report.worst_margin >= -1e-9;
  return report;
}

}  // namespace tvopt
