#include "tvopt/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "tvopt/consensus.hpp"

namespace tvopt {

namespace {

TrajectoryRecord baseline_record(int k, std::int64_t comms, std::int64_t grads,
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

void check_inputs(const LocalObjective& obj, const MixingSchedule& schedule,
                  const Eigen::MatrixXd& x0, double alpha, int iterations) {
  if (x0.rows() != obj.dimension() || x0.cols() != obj.agents())
    throw std::invalid_argument("baseline: x0 shape does not match objective");
  if (obj.agents() != schedule.size())
    throw std::invalid_argument("baseline: agent count does not match schedule");
  if (!(alpha >= 0.0)) throw std::invalid_argument("baseline: alpha must be >= 0");
  if (iterations < 0) throw std::invalid_argument("baseline: iterations must be >= 0");
}

}  // namespace

Trajectory diging(const LocalObjective& obj, const MixingSchedule& schedule,
                  const Eigen::MatrixXd& x0, double alpha, int iterations,
                  const ReferenceSolution& ref) {
  check_inputs(obj, schedule, x0, alpha, iterations);
  const int n = obj.agents();

  Trajectory out;
  out.method = "diging";
  out.records.reserve(static_cast<std::size_t>(iterations) + 1);

  Eigen::MatrixXd x = x0;
  Eigen::MatrixXd g_prev = obj.stacked_gradient(x);
  Eigen::MatrixXd y = g_prev;  // tracker starts at the initial gradients
  std::int64_t comms = 0;
  std::int64_t grads = n;
  out.records.push_back(baseline_record(0, comms, grads, x, obj, ref));

  for (int k = 0; k < iterations; ++k) {
    const Eigen::MatrixXd& w = schedule.matrix_at(k);
    Eigen::MatrixXd x_next = x * w - alpha * y;
    Eigen::MatrixXd g_next = obj.stacked_gradient(x_next);
    grads += n;
    y = y * w + g_next - g_prev;
    comms += 2;
    x = std::move(x_next);
    g_prev = std::move(g_next);
    out.records.push_back(baseline_record(k + 1, comms, grads, x, obj, ref));
  }
  out.final_iterate = std::move(x);
  return out;
}

Trajectory extra(const LocalObjective& obj, const MixingSchedule& schedule,
                 const Eigen::MatrixXd& x0, double alpha, int iterations,
                 const ReferenceSolution& ref) {
  check_inputs(obj, schedule, x0, alpha, iterations);
  const int n = obj.agents();

  Trajectory out;
  out.method = "extra";
  out.records.reserve(static_cast<std::size_t>(iterations) + 1);

  Eigen::MatrixXd x_prev = x0;
  std::int64_t comms = 0;
  std::int64_t grads = 0;
  out.records.push_back(baseline_record(0, comms, grads, x_prev, obj, ref));
  if (iterations == 0) {
    out.final_iterate = std::move(x_prev);
    return out;
  }

  Eigen::MatrixXd g_prev = obj.stacked_gradient(x_prev);
  grads += n;
  Eigen::MatrixXd x = x_prev * schedule.matrix_at(0) - alpha * g_prev;
  comms += 1;
  out.records.push_back(baseline_record(1, comms, grads, x, obj, ref));

  for (int k = 1; k < iterations; ++k) {
    const Eigen::MatrixXd& w = schedule.matrix_at(k);
    Eigen::MatrixXd g = obj.stacked_gradient(x);
    grads += n;
    Eigen::MatrixXd x_next = x + x * w - 0.5 * (x_prev + x_prev * w) -
                             alpha * (g - g_prev);
    comms += 1;
    x_prev = std::move(x);
    g_prev = std::move(g);
    x = std::move(x_next);
    out.records.push_back(baseline_record(k + 1, comms, grads, x, obj, ref));
  }
  out.final_iterate = std::move(x);
  return out;
}

Trajectory diging(const LocalObjective& obj, const MixingSchedule& schedule,
                  const Eigen::VectorXd& x0, double alpha, int iterations,
                  const ReferenceSolution& ref) {
  return diging(obj, schedule, Eigen::MatrixXd(x0.replicate(1, obj.agents())),
                alpha, iterations, ref);
}

Trajectory extra(const LocalObjective& obj, const MixingSchedule& schedule,
                 const Eigen::VectorXd& x0, double alpha, int iterations,
                 const ReferenceSolution& ref) {
  return extra(obj, schedule, Eigen::MatrixXd(x0.replicate(1, obj.agents())),
               alpha, iterations, ref);
}

double diging_default_alpha(const SpectralConstants& constants, double delta_hat) {
  constants.validate();
  if (!(delta_hat >= 0.0 && delta_hat < 1.0))
    throw std::invalid_argument("diging_default_alpha: delta_hat must be in [0, 1)");
  const double gap = 1.0 - delta_hat;
  return constants.mu_hat() * gap * gap / 10.0;
}

}  // namespace tvopt
