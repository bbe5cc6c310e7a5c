#include "tvopt/consensus.hpp"

#include <cmath>
#include <stdexcept>

namespace tvopt {

ParameterMatrix project_consensus(const ParameterMatrix& x) {
  const Eigen::VectorXd mean = x.rowwise().mean();
  return mean.replicate(1, x.cols());
}

double distance_to_consensus(const ParameterMatrix& x) {
  return (x - project_consensus(x)).norm();
}

ConsensusRun run_consensus(ParameterMatrix x0, const MixingSchedule& s,
                           std::int64_t k_start, int rounds) {
  if (rounds < 0) throw std::invalid_argument("run_consensus: rounds must be >= 0");
  if (k_start < 0) throw std::invalid_argument("run_consensus: k_start must be >= 0");
  if (x0.cols() != s.size())
    throw std::invalid_argument("run_consensus: column count does not match schedule");
  for (int r = 0; r < rounds; ++r) x0 = x0 * s.matrix_at(k_start + r);
  return {std::move(x0), rounds};
}

int rounds_needed(double r0, double eps, double delta_hat, int window) {
  if (!(delta_hat > 0.0 && delta_hat < 1.0))
    throw std::invalid_argument("rounds_needed: delta_hat must be in (0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("rounds_needed: eps must be > 0");
  if (r0 < 0.0) throw std::invalid_argument("rounds_needed: r0 must be >= 0");
  if (window < 1) throw std::invalid_argument("rounds_needed: window must be >= 1");
  if (r0 <= eps) return 0;
  const double windows = std::log(r0 / eps) / std::log(1.0 / delta_hat);
  if (!(windows * window < 2e9))
    throw std::runtime_error(
        "rounds_needed: plan exceeds the int round budget; delta_hat is too "
        "close to 1 for this target");
  const int whole = static_cast<int>(std::ceil(windows - 1e-12));
  return window * std::max(whole, 0);
}

}  // namespace tvopt
