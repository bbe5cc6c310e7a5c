#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "tvopt/consensus.hpp"
#include "tvopt/objectives.hpp"
#include "tvopt/topology.hpp"
#include "tvopt/trajectory.hpp"

namespace tvopt {

/// Inner-loop policy for the projection sub-problem: either a fixed number
/// of gossip rounds per outer step, or enough rounds for squared projection
/// accuracy eps1.
struct InnerMode {
  enum class Kind { FixedRounds, AccuracyDriven };

  Kind kind = Kind::FixedRounds;
  int rounds = 1;     // FixedRounds
  double eps1 = 0.0;  // AccuracyDriven

  static InnerMode fixed_rounds(int rounds) {
    return {Kind::FixedRounds, rounds, 0.0};
  }
  static InnerMode accuracy_driven(double eps1) {
    return {Kind::AccuracyDriven, 0, eps1};
  }
};

struct SolverConfig {
  /// Outer step size; 0 selects the default n/(mu_f + L_f), i.e.
  /// 1/(mu_hat + L_hat).
  double gamma = 0.0;
  InnerMode inner = InnerMode::fixed_rounds(1);
  int outer_iterations = 0;
  std::uint64_t seed = 0;
  /// Accelerated variant only: use the ambient-space constants
  /// (L_max, L_max/mu_min) instead of the restricted (L_f/n, L_f/mu_f).
  bool ambient_constants = false;
};

/// Idealized projected gradient descent with exact projections. Iterates
/// stay exactly consensual, so this equals centralized gradient descent on f
/// with effective step gamma/n. No communication is counted.
Trajectory exact_projected_gd(const LocalObjective& obj,
                              const SpectralConstants& constants,
                              const Eigen::VectorXd& x0, int outer_iterations,
                              const ReferenceSolution& ref, double gamma = 0.0);

/// Decentralized projected gradient descent: local gradient step, then
/// gossip rounds standing in for the projection onto the consensus subspace.
/// Gossip consumes schedule indices monotonically across outer steps; the
/// network never rewinds.
Trajectory decentralized_projected_gd(const LocalObjective& obj,
                                      const SpectralConstants& constants,
                                      const MixingSchedule& schedule,
                                      const ScheduleStats& stats,
                                      const Eigen::VectorXd& x0,
                                      const SolverConfig& cfg,
                                      const ReferenceSolution& ref);

/// Accelerated variant: gradient step 1/L, inexact projection, then constant
/// Nesterov momentum (sqrt(kappa)-1)/(sqrt(kappa)+1) on the projected
/// sequence. L and kappa default to the restricted constants L_f/n and
/// L_f/mu_f.
Trajectory accelerated_projected_gd(const LocalObjective& obj,
                                    const SpectralConstants& constants,
                                    const MixingSchedule& schedule,
                                    const ScheduleStats& stats,
                                    const Eigen::VectorXd& x0,
                                    const SolverConfig& cfg,
                                    const ReferenceSolution& ref);

/// Per-step squared projection accuracy that yields a final squared error of
/// eps: eps1 = mu_f^2 eps / (13 n^2 L_max^2).
double epsilon1_for_target(double eps, int n, double mu_f, double L_max);

/// Outer iterations until the squared distance contraction
/// r_{k+1}^2 <= r_k^2 (1 - mu_hat/(8 L_hat)) drives r_0^2 below the stopping
/// threshold 12 L_max^2 eps1 / mu_hat^2 belonging to target eps.
int outer_iteration_count(double eps, double r0, const SpectralConstants& constants);

struct AccuracyBudget {
  double eps = 0.0;
  double eps1 = 0.0;
  int N_outer = 0;
  int m_inner = 0;
  std::int64_t total_comm = 0;

  void validate() const;
};

/// Worst-case communication budget: composes epsilon1_for_target,
/// outer_iteration_count, and rounds_needed applied to the per-step
/// consensus-distance bound
///   eps1 (1 + gamma L_max) + gamma ||grad F(X*)|| + gamma L_max r0.
/// delta_hat = 0 (exact averaging) is floored at 1e-15 before the log.
AccuracyBudget communication_budget(double eps, double r0,
                               const SpectralConstants& constants,
                               const ScheduleStats& stats,
                               double grad_norm_at_star);

}  // namespace tvopt
