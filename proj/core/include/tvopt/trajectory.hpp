#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tvopt {

/// High-accuracy centralized optimum. Diagnostics only: solvers never feed
/// it back into their iterations.
struct ReferenceSolution {
  Eigen::VectorXd x_star;
  double f_star = 0.0;
  double grad_norm_at_star = 0.0;  // ||grad F(X*)||_F of the stacked gradient
};

struct TrajectoryRecord {
  int k = 0;
  std::int64_t comms = 0;  // cumulative mixing rounds
  std::int64_t grads = 0;  // cumulative per-agent gradient evaluations
  double fgap = 0.0;       // f(mean column) - f*
  double dist_sq_to_opt = 0.0;
  double dist_to_consensus = 0.0;
  double r_k = 0.0;  // ||proj_K(X_k) - Pi*||_F
};

/// Per-outer-iteration log of one solver run; always outer_iterations + 1
/// records, cumulative counters non-decreasing.
struct Trajectory {
  std::string method;
  std::vector<TrajectoryRecord> records;
  Eigen::MatrixXd final_iterate;  // d x n

  const TrajectoryRecord& back() const { return records.back(); }
};

}  // namespace tvopt
