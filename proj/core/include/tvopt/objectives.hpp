#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace tvopt {

/// Curvature constants of the aggregate f = sum_i f_i and of the worst
/// per-agent terms. The hatted variants mu_f/n, L_f/n are the constants of
/// F restricted to the consensus subspace; they drive every step size and
/// budget.
struct SpectralConstants {
  double mu_f = 0.0;
  double L_f = 0.0;
  double mu_min = 0.0;
  double L_max = 0.0;
  int n = 1;

  double mu_hat() const { return mu_f / n; }
  double L_hat() const { return L_f / n; }
  double kappa_f() const { return L_f / mu_f; }

  void validate() const;
};

/// Per-agent differentiable objective f_i. Implementations must be
/// deterministic and immutable after construction; value/gradient calls for
/// distinct agents are safe to issue concurrently.
class LocalObjective {
 public:
  virtual ~LocalObjective() = default;

  virtual int dimension() const = 0;
  virtual int agents() const = 0;
  virtual double value(int agent, const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(int agent, const Eigen::VectorXd& x) const = 0;

  /// Certified curvature constants; throws when the family has none.
  virtual SpectralConstants spectral_constants() const;

  /// Closed-form minimizer of f when the family knows one.
  virtual bool analytic_optimum(Eigen::VectorXd& /*x_star*/) const { return false; }

  /// f(x) = sum_i f_i(x) and its gradient.
  double f_value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd f_gradient(const Eigen::VectorXd& x) const;

  /// F(X) = sum_i f_i(x_i) and the stacked gradient [grad f_1(x_1) ... ].
  /// Column order is fixed, so reductions are bitwise reproducible.
  double stacked_value(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd stacked_gradient(const Eigen::MatrixXd& x) const;
};

/// f_i(x) = x_i^2 / 2 + (alpha / 2n) ||x||^2 on dim >= n coordinates, so
/// f(x) = (1 + alpha) ||x||^2 / 2 when dim == n. Minimizer 0, value 0.
/// Exposes the analytic constants mu_i = alpha/n, L_i = 1 + alpha/n,
/// mu_sum = alpha, L_sum = n + alpha.
class QuadraticFamily final : public LocalObjective {
 public:
  QuadraticFamily(int n_agents, double alpha, int dim);

  int dimension() const override { return d_; }
  int agents() const override { return n_; }
  double value(int agent, const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(int agent, const Eigen::VectorXd& x) const override;
  SpectralConstants spectral_constants() const override;
  bool analytic_optimum(Eigen::VectorXd& x_star) const override;

  double alpha() const { return alpha_; }
  double mu_sum() const { return alpha_; }
  double L_sum() const { return n_ + alpha_; }

 private:
  int n_;
  int d_;
  double alpha_;
};

/// One agent's share of the training data, raw (not bias-augmented).
/// labels hold the file values: {0,1} or {-1,+1}.
struct DataShard {
  Eigen::MatrixXd features;  // rows are samples
  Eigen::VectorXd labels;
};

/// Regularized logistic regression split across agents:
///   f_i(x) = (1/m) sum_{j in shard i} log(1 + exp(-c_j <a_j, x>))
///            + (lambda / 2n) ||x||^2,
/// where m is the global sample count, c_j in {-1,+1} is the mapped label
/// and a_j is the sample with a trailing constant-1 bias coordinate.
class LogisticObjective final : public LocalObjective {
 public:
  LogisticObjective(const std::vector<DataShard>& shards, double lambda);

  int dimension() const override { return d_; }
  int agents() const override { return n_; }
  double value(int agent, const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(int agent, const Eigen::VectorXd& x) const override;

  /// mu_f = lambda, L_f = lambda + sigma_max(A)^2/(4m); per-agent bounds
  /// lambda/n + sigma_max(A_i)^2/(4m). Spectral norms come from power
  /// iteration at relative tolerance 1e-8, inflated by that tolerance so the
  /// results stay upper bounds. Rejects lambda = 0 (f would not be strongly
  /// convex).
  SpectralConstants spectral_constants() const override;

  double lambda() const { return lambda_; }
  std::int64_t total_samples() const { return m_total_; }

  /// sigma_max(A)^2 / (4m) of the full augmented sample matrix: the
  /// smoothness of the unregularized loss. Backs the default-lambda rule.
  double data_smoothness() const;

 private:
  struct AugmentedShard {
    Eigen::MatrixXd features;  // bias column appended
    Eigen::VectorXd labels;    // mapped to {-1,+1}
  };

  std::vector<AugmentedShard> shards_;
  double lambda_ = 0.0;
  std::int64_t m_total_ = 0;
  int n_ = 0;
  int d_ = 0;
};

std::unique_ptr<QuadraticFamily> quadratic_family(int n_agents, double alpha,
                                                  int dim = -1);

std::unique_ptr<LogisticObjective> logistic_objective(
    const std::vector<DataShard>& shards, double lambda);

/// Analytic constants for the built-in families.
SpectralConstants estimate_constants(const LocalObjective& obj);

struct CoercivityReport {
  int trials = 0;
  double worst_margin = 0.0;
  bool pass = false;
};

/// Samples random pairs (x, y) and checks the strongly-convex/smooth
/// coercivity inequality
///   <grad f(x) - grad f(y), x - y> >=
///     mu L/(mu+L) ||x-y||^2 + 1/(mu+L) ||grad f(x) - grad f(y)||^2
/// for the aggregate f. Failures are reported, not thrown.
CoercivityReport coercivity_check(const LocalObjective& obj,
                                  const SpectralConstants& constants, int trials,
                                  std::uint64_t seed);

}  // namespace tvopt
