#include "tvopt/optimizers.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace tvopt {

namespace {

TrajectoryRecord make_record(int k, std::int64_t comms, std::int64_t grads,
                             const Eigen::MatrixXd& x, const LocalObjective& obj,
                             const ReferenceSolution& ref) {
  TrajectoryRecord rec;
  rec.k = k;
  rec.comms = comms;
  rec.grads = grads;
  const Eigen::VectorXd mean = x.rowwise().mean();
  rec.fgap = obj.f_value(mean) - ref.f_star;
  rec.dist_sq_to_opt = (x.colwise() - ref.x_star).squaredNorm();
  rec.dist_to_consensus = distance_to_consensus(x);
  rec.r_k = std::sqrt(static_cast<double>(x.cols())) * (mean - ref.x_star).norm();
  return rec;
}

double default_gamma(const SpectralConstants& c) {
  return static_cast<double>(c.n) / (c.mu_f + c.L_f);
}

void check_start(const LocalObjective& obj, const Eigen::VectorXd& x0) {
  if (x0.size() != obj.dimension())
    throw std::invalid_argument("solver: x0 dimension does not match objective");
}

/// Replaces y by the inexact projection of itself and returns the gossip
/// rounds spent. Schedule indices advance through next_k.
int project_inexact(Eigen::MatrixXd& y, const MixingSchedule& schedule,
                    const ScheduleStats& stats, const InnerMode& inner,
                    std::int64_t& next_k) {
  if (inner.kind == InnerMode::Kind::FixedRounds) {
    if (inner.rounds < 0)
      throw std::invalid_argument("solver: fixed inner rounds must be >= 0");
    ConsensusRun run = run_consensus(std::move(y), schedule, next_k, inner.rounds);
    y = std::move(run.x);
    next_k += run.rounds_used;
    return run.rounds_used;
  }

  if (!(inner.eps1 > 0.0))
    throw std::invalid_argument("solver: accuracy mode needs eps1 > 0");
  const double target = std::sqrt(inner.eps1);
  const double delta = std::max(stats.delta_hat, 1e-15);
  const double dist = distance_to_consensus(y);
  int used = dist <= target ? 0 : rounds_needed(dist, target, delta, stats.window);
  ConsensusRun run = run_consensus(std::move(y), schedule, next_k, used);
  y = std::move(run.x);
  next_k += used;

  // delta_hat is estimated over a finite horizon; if a later window mixes
  // worse than the estimate, keep gossiping whole windows until the
  // squared-accuracy contract actually holds.
  int topups = 0;
  while (distance_to_consensus(y) > target) {
    if (++topups > 64)
      throw std::runtime_error(
          "solver: projection accuracy unreachable; delta_hat estimate is "
          "too optimistic for this schedule");
    ConsensusRun more = run_consensus(std::move(y), schedule, next_k, stats.window);
    y = std::move(more.x);
    next_k += stats.window;
    used += stats.window;
  }
  return used;
}

}  // namespace

void AccuracyBudget::validate() const {
  if (!(eps1 <= eps))
    throw std::invalid_argument("AccuracyBudget: eps1 must be <= eps");
  if (N_outer < 0 || m_inner < 0 || total_comm < 0)
    throw std::invalid_argument("AccuracyBudget: counts must be >= 0");
}

Trajectory exact_projected_gd(const LocalObjective& obj,
                              const SpectralConstants& constants,
                              const Eigen::VectorXd& x0, int outer_iterations,
                              const ReferenceSolution& ref, double gamma) {
  constants.validate();
  check_start(obj, x0);
  if (outer_iterations < 0)
    throw std::invalid_argument("solver: outer_iterations must be >= 0");
  if (gamma <= 0.0) gamma = default_gamma(constants);
  const int n = obj.agents();
  const double step = gamma / static_cast<double>(n);

  Trajectory out;
  out.method = "exact";
  out.records.reserve(static_cast<std::size_t>(outer_iterations) + 1);

  Eigen::VectorXd pi = x0;
  std::int64_t grads = 0;
  out.records.push_back(make_record(0, 0, grads, pi.replicate(1, n), obj, ref));
  for (int k = 0; k < outer_iterations; ++k) {
    pi -= step * obj.f_gradient(pi);
    grads += n;
    out.records.push_back(make_record(k + 1, 0, grads, pi.replicate(1, n), obj, ref));
  }
  out.final_iterate = pi.replicate(1, n);
  return out;
}

Trajectory decentralized_projected_gd(const LocalObjective& obj,
                                      const SpectralConstants& constants,
                                      const MixingSchedule& schedule,
                                      const ScheduleStats& stats,
                                      const Eigen::VectorXd& x0,
                                      const SolverConfig& cfg,
                                      const ReferenceSolution& ref) {
  constants.validate();
  check_start(obj, x0);
  if (obj.agents() != schedule.size())
    throw std::invalid_argument("solver: agent count does not match schedule");
  if (cfg.outer_iterations < 0)
    throw std::invalid_argument("solver: outer_iterations must be >= 0");
  const int n = obj.agents();
  const double gamma = cfg.gamma > 0.0 ? cfg.gamma : default_gamma(constants);

  Trajectory out;
  out.method = "proj-gd";
  out.records.reserve(static_cast<std::size_t>(cfg.outer_iterations) + 1);

  Eigen::MatrixXd x = x0.replicate(1, n);
  std::int64_t next_k = 0;
  std::int64_t comms = 0;
  std::int64_t grads = 0;
  out.records.push_back(make_record(0, comms, grads, x, obj, ref));

  for (int k = 0; k < cfg.outer_iterations; ++k) {
    Eigen::MatrixXd y = x - gamma * obj.stacked_gradient(x);
    grads += n;
    comms += project_inexact(y, schedule, stats, cfg.inner, next_k);
    x = std::move(y);
    out.records.push_back(make_record(k + 1, comms, grads, x, obj, ref));
  }
  out.final_iterate = std::move(x);
  return out;
}

Trajectory accelerated_projected_gd(const LocalObjective& obj,
                                    const SpectralConstants& constants,
                                    const MixingSchedule& schedule,
                                    const ScheduleStats& stats,
                                    const Eigen::VectorXd& x0,
                                    const SolverConfig& cfg,
                                    const ReferenceSolution& ref) {
  constants.validate();
  check_start(obj, x0);
  if (obj.agents() != schedule.size())
    throw std::invalid_argument("solver: agent count does not match schedule");
  if (cfg.outer_iterations < 0)
    throw std::invalid_argument("solver: outer_iterations must be >= 0");
  const int n = obj.agents();

  const double L = cfg.ambient_constants ? constants.L_max : constants.L_hat();
  const double kappa = cfg.ambient_constants ? constants.L_max / constants.mu_min
                                             : constants.kappa_f();
  if (!(kappa >= 1.0))
    throw std::invalid_argument("accelerated_projected_gd: condition number < 1");
  const double momentum = (std::sqrt(kappa) - 1.0) / (std::sqrt(kappa) + 1.0);

  Trajectory out;
  out.method = "accelerated";
  out.records.reserve(static_cast<std::size_t>(cfg.outer_iterations) + 1);

  Eigen::MatrixXd x = x0.replicate(1, n);
  Eigen::MatrixXd y_prev = x;  // tilde-Y_0 = X_0
  std::int64_t next_k = 0;
  std::int64_t comms = 0;
  std::int64_t grads = 0;
  out.records.push_back(make_record(0, comms, grads, x, obj, ref));

  for (int k = 0; k < cfg.outer_iterations; ++k) {
    Eigen::MatrixXd y = x - (1.0 / L) * obj.stacked_gradient(x);
    grads += n;
    comms += project_inexact(y, schedule, stats, cfg.inner, next_k);
    x = y + momentum * (y - y_prev);
    y_prev = std::move(y);
    out.records.push_back(make_record(k + 1, comms, grads, x, obj, ref));
  }
  out.final_iterate = std::move(x);
  return out;
}

double epsilon1_for_target(double eps, int n, double mu_f, double L_max) {
  if (!(eps > 0.0) || n < 1 || !(mu_f > 0.0) || !(L_max > 0.0))
    throw std::invalid_argument("epsilon1_for_target: all arguments must be positive");
  const double nd = static_cast<double>(n);
  return mu_f * mu_f * eps / (13.0 * nd * nd * L_max * L_max);
}

int outer_iteration_count(double eps, double r0, const SpectralConstants& constants) {
  constants.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("outer_iteration_count: eps must be > 0");
  if (!(r0 > 0.0)) throw std::invalid_argument("outer_iteration_count: r0 must be > 0");

  const double eps1 = epsilon1_for_target(eps, constants.n, constants.mu_f,
                                          constants.L_max);
  const double mu_hat = constants.mu_hat();
  const double threshold = 12.0 * constants.L_max * constants.L_max * eps1 /
                           (mu_hat * mu_hat);
  if (r0 * r0 <= threshold) return 0;
  const double rate = -std::log1p(-mu_hat / (8.0 * constants.L_hat()));
  const double steps = std::log(r0 * r0 / threshold) / rate;
  return static_cast<int>(std::ceil(steps - 1e-9));
}

AccuracyBudget communication_budget(double eps, double r0,
                               const SpectralConstants& constants,
                               const ScheduleStats& stats,
                               double grad_norm_at_star) {
  constants.validate();
  if (grad_norm_at_star < 0.0)
    throw std::invalid_argument("communication_budget: gradient norm must be >= 0");

  AccuracyBudget budget;
  budget.eps = eps;
  budget.eps1 = epsilon1_for_target(eps, constants.n, constants.mu_f, constants.L_max);
  budget.N_outer = outer_iteration_count(eps, r0, constants);

  const double gamma = default_gamma(constants);
  const double per_step_dist = budget.eps1 * (1.0 + gamma * constants.L_max) +
                               gamma * grad_norm_at_star +
                               gamma * constants.L_max * r0;
  const double delta = std::max(stats.delta_hat, 1e-15);
  budget.m_inner =
      rounds_needed(per_step_dist, std::sqrt(budget.eps1), delta, stats.window);
  budget.total_comm =
      static_cast<std::int64_t>(budget.N_outer) * budget.m_inner;
  budget.validate();
  return budget;
}

}  // namespace tvopt
