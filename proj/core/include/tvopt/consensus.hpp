#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "tvopt/topology.hpp"

namespace tvopt {

/// d x n matrix of per-agent parameter copies; column i is agent i's vector.
/// All norms on it are Frobenius.
using ParameterMatrix = Eigen::MatrixXd;

/// Orthogonal projection onto the consensus subspace K = {all columns equal}:
/// every output column is the input's column mean.
ParameterMatrix project_consensus(const ParameterMatrix& x);

/// Frobenius norm of X - project_consensus(X); zero iff X is consensual.
double distance_to_consensus(const ParameterMatrix& x);

struct ConsensusRun {
  ParameterMatrix x;
  int rounds_used = 0;
};

/// Gossip averaging: applies X <- X W(k) for k = k_start .. k_start+rounds-1.
/// Preserves the column mean at every round.
ConsensusRun run_consensus(ParameterMatrix x0, const MixingSchedule& s,
                           std::int64_t k_start, int rounds);

/// Smallest whole number of windows worth of gossip rounds that certifiably
/// brings a consensus distance of r0 below eps, given the window contraction
/// factor delta_hat in (0, 1):
///   m = window * ceil(log(r0/eps) / log(1/delta_hat)),
/// and 0 when r0 <= eps. Partial windows carry no contraction certificate,
/// so the count is quantized to full windows.
int rounds_needed(double r0, double eps, double delta_hat, int window);

}  // namespace tvopt
