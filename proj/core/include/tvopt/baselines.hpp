#pragma once

#include <Eigen/Dense>

#include "tvopt/objectives.hpp"
#include "tvopt/topology.hpp"
#include "tvopt/trajectory.hpp"

namespace tvopt {

/// DIGing (gradient tracking):
///   X_{k+1} = X_k W(k) - alpha Y_k
///   Y_{k+1} = Y_k W(k) + grad F(X_{k+1}) - grad F(X_k),  Y_0 = grad F(X_0).
/// Two mixings per iteration are counted as communication. x0 is the full
/// d x n start; the vector overload replicates a common start point.
Trajectory diging(const LocalObjective& obj, const MixingSchedule& schedule,
                  const Eigen::MatrixXd& x0, double alpha, int iterations,
                  const ReferenceSolution& ref);
Trajectory diging(const LocalObjective& obj, const MixingSchedule& schedule,
                  const Eigen::VectorXd& x0, double alpha, int iterations,
                  const ReferenceSolution& ref);

/// EXTRA:
///   X_1     = X_0 W(0) - alpha grad F(X_0)
///   X_{k+1} = X_k (I + W(k)) - X_{k-1} (I + W(k))/2
///             - alpha (grad F(X_k) - grad F(X_{k-1})),  k >= 1.
/// On a time-varying schedule W(k) is simply the step-k matrix; one mixing
/// per iteration is counted.
Trajectory extra(const LocalObjective& obj, const MixingSchedule& schedule,
                 const Eigen::MatrixXd& x0, double alpha, int iterations,
                 const ReferenceSolution& ref);
Trajectory extra(const LocalObjective& obj, const MixingSchedule& schedule,
                 const Eigen::VectorXd& x0, double alpha, int iterations,
                 const ReferenceSolution& ref);

/// Conservative default step size mu_hat (1 - delta_hat)^2 / C with C = 10.
double diging_default_alpha(const SpectralConstants& constants, double delta_hat);

}  // namespace tvopt
