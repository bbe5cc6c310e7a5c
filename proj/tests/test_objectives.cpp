#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "test_util.hpp"
#include "tvopt/consensus.hpp"
#include "tvopt/objectives.hpp"

using namespace tvopt;
using tvopt_test::random_matrix;
using tvopt_test::random_vector;
using tvopt_test::synthetic_logistic_shards;

namespace {

/// Central finite differences, step 1e-6.
Eigen::VectorXd fd_gradient(const LocalObjective& obj, int agent,
                            const Eigen::VectorXd& x) {
  const double h = 1e-6;
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (obj.value(agent, xp) - obj.value(agent, xm)) / (2.0 * h);
  }
  return g;
}

/// Shard whose only sample is the bare bias coordinate: augmented a = e_1.
std::vector<DataShard> unit_bias_shard(double label) {
  DataShard shard;
  shard.features = Eigen::MatrixXd::Zero(1, 0);
  shard.labels = Eigen::VectorXd::Constant(1, label);
  return {shard};
}

}  // namespace

TEST_SUITE_BEGIN("objectives");

TEST_CASE("logistic value at zero is log 2") {
  const auto shards = synthetic_logistic_shards(4, 50, 6, 17);
  const auto obj = logistic_objective(shards, 0.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(obj->dimension());
  CHECK(obj->f_value(zero) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("logistic gradient for a single unit sample") {
  const auto obj = logistic_objective(unit_bias_shard(+1.0), 0.0);
  REQUIRE(obj->dimension() == 1);
  const Eigen::VectorXd g = obj->gradient(0, Eigen::VectorXd::Zero(1));
  CHECK(g(0) == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("logistic accepts {0,1} labels by mapping 0 to -1") {
  DataShard zero_labeled;
  zero_labeled.features = Eigen::MatrixXd::Zero(1, 0);
  zero_labeled.labels = Eigen::VectorXd::Zero(1);
  DataShard minus_labeled;
  minus_labeled.features = Eigen::MatrixXd::Zero(1, 0);
  minus_labeled.labels = Eigen::VectorXd::Constant(1, -1.0);
  const auto a = logistic_objective({zero_labeled}, 0.0);
  const auto b = logistic_objective({minus_labeled}, 0.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.3);
  CHECK(a->value(0, x) == b->value(0, x));
}

TEST_CASE("logistic rejects bad labels and negative lambda") {
  DataShard bad;
  bad.features = Eigen::MatrixXd::Zero(1, 0);
  bad.labels = Eigen::VectorXd::Constant(1, 2.0);
  CHECK_THROWS_AS(logistic_objective({bad}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(logistic_objective(unit_bias_shard(1.0), -0.1),
                  std::invalid_argument);
}

TEST_CASE("logistic rejects empty shards") {
  DataShard empty;
  empty.features = Eigen::MatrixXd::Zero(0, 3);
  empty.labels = Eigen::VectorXd::Zero(0);
  CHECK_THROWS_AS(logistic_objective({empty}, 0.1), std::invalid_argument);
}

TEST_CASE("logistic gradient matches central differences") {
  const auto shards = synthetic_logistic_shards(3, 30, 5, 23);
  const auto obj = logistic_objective(shards, 0.05);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::VectorXd x = random_vector(obj->dimension(), 100 + seed);
    for (int agent = 0; agent < obj->agents(); ++agent) {
      const Eigen::VectorXd analytic = obj->gradient(agent, x);
      const Eigen::VectorXd numeric = fd_gradient(*obj, agent, x);
      CHECK((analytic - numeric).norm() / (1.0 + analytic.norm()) <= 1e-6);
    }
  }
}

TEST_CASE("quadratic family attaches its analytic constants") {
  const auto obj = quadratic_family(4, 1.0);
  const SpectralConstants c = obj->spectral_constants();
  CHECK(c.mu_f == 2.0);
  CHECK(c.L_f == 2.0);
  CHECK(c.mu_min == 0.25);
  CHECK(c.L_max == 1.25);
  CHECK(obj->L_sum() == 5.0);
  CHECK(obj->mu_sum() == 1.0);
}

TEST_CASE("quadratic family gradient at a basis vector") {
  const auto obj = quadratic_family(2, 2.0);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(2);
  e1(0) = 1.0;
  const Eigen::VectorXd g = obj->gradient(0, e1);
  CHECK(g(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g(1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("quadratic family value matches the closed form when dim == n") {
  const auto obj = quadratic_family(5, 0.3);
  const Eigen::VectorXd x = random_vector(5, 7);
  CHECK(obj->f_value(x) ==
        doctest::Approx(0.5 * 1.3 * x.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("quadratic family validates its arguments") {
  CHECK_THROWS_AS(quadratic_family(3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(quadratic_family(3, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(quadratic_family(3, 1.0, 2), std::invalid_argument);
}

TEST_CASE("estimate_constants for a single unit logistic sample") {
  const auto obj = logistic_objective(unit_bias_shard(1.0), 0.1);
  const SpectralConstants c = estimate_constants(*obj);
  CHECK(c.mu_f == 0.1);
  CHECK(c.L_f == doctest::Approx(0.35).epsilon(1e-7));
  CHECK(c.L_max == doctest::Approx(0.35).epsilon(1e-7));
}

TEST_CASE("estimate_constants rejects lambda = 0 logistic") {
  const auto obj = logistic_objective(unit_bias_shard(1.0), 0.0);
  CHECK_THROWS_AS(estimate_constants(*obj), std::invalid_argument);
}

TEST_CASE("logistic smoothness matches a dense eigenvalue oracle") {
  const auto shards = synthetic_logistic_shards(5, 50, 5, 31);
  const double lambda = 0.2;
  const auto obj = logistic_objective(shards, lambda);
  const SpectralConstants c = estimate_constants(*obj);

  Eigen::MatrixXd all(50, 6);
  Eigen::Index row = 0;
  for (const DataShard& s : shards) {
    all.middleRows(row, s.features.rows()).leftCols(5) = s.features;
    all.middleRows(row, s.features.rows()).col(5).setOnes();
    row += s.features.rows();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(all.transpose() * all);
  const double oracle = lambda + es.eigenvalues().maxCoeff() / (4.0 * 50.0);
  CHECK(c.L_f == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(c.L_f >= oracle * (1 - 1e-12));  // certified upper bound
}

TEST_CASE("coercivity holds with equality for the quadratic family") {
  const auto obj = quadratic_family(3, 1.0);
  const CoercivityReport rep = coercivity_check(*obj, obj->spectral_constants(), 100, 7);
  CHECK(rep.pass);
  CHECK(rep.worst_margin >= -1e-9);
  CHECK(rep.worst_margin <= 1e-8);  // mu = L makes the inequality tight
}

TEST_CASE("coercivity is an identity at x == y") {
  const auto obj = quadratic_family(3, 1.0);
  const Eigen::VectorXd x = random_vector(3, 3);
  const Eigen::VectorXd g = obj->f_gradient(x) - obj->f_gradient(x);
  CHECK(g.norm() == 0.0);
}

TEST_CASE("coercivity holds for the logistic objective") {
  const auto shards = synthetic_logistic_shards(4, 60, 4, 43);
  const auto obj = logistic_objective(shards, 0.1);
  const CoercivityReport rep = coercivity_check(*obj, estimate_constants(*obj), 100, 11);
  CHECK(rep.pass);
}

TEST_CASE("finite-difference consistency across both families") {
  const auto quad = quadratic_family(4, 0.5);
  const auto logi = logistic_objective(synthetic_logistic_shards(4, 40, 3, 5), 0.05);
  const LocalObjective* objs[] = {quad.get(), logi.get()};
  for (const LocalObjective* obj : objs) {
    for (std::uint64_t t = 0; t < 50; ++t) {
      const Eigen::VectorXd x = random_vector(obj->dimension(), 1000 + t);
      const int agent = static_cast<int>(t % obj->agents());
      const Eigen::VectorXd analytic = obj->gradient(agent, x);
      const Eigen::VectorXd numeric = fd_gradient(*obj, agent, x);
      CHECK((analytic - numeric).norm() / (1.0 + analytic.norm()) <= 1e-5);
    }
  }
}

TEST_CASE("stacked evaluations agree with the aggregate on consensual input") {
  const auto obj = logistic_objective(synthetic_logistic_shards(5, 45, 4, 29), 0.1);
  const Eigen::VectorXd x = random_vector(obj->dimension(), 71);
  const Eigen::MatrixXd consensual = x.replicate(1, obj->agents());

  CHECK(obj->stacked_value(consensual) == doctest::Approx(obj->f_value(x)).epsilon(1e-12));

  const Eigen::MatrixXd stacked = obj->stacked_gradient(consensual);
  const Eigen::MatrixXd projected = project_consensus(stacked);
  const Eigen::VectorXd expected = obj->f_gradient(x) / obj->agents();
  for (int i = 0; i < obj->agents(); ++i)
    CHECK((projected.col(i) - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("restricted conditioning on consensual pairs (quadratic family)") {
  const auto obj = quadratic_family(6, 0.4);
  const SpectralConstants c = obj->spectral_constants();
  const int n = obj->agents();
  for (std::uint64_t t = 0; t < 20; ++t) {
    const Eigen::VectorXd x = random_vector(obj->dimension(), 300 + t);
    const Eigen::VectorXd y = random_vector(obj->dimension(), 400 + t);
    const Eigen::MatrixXd X = x.replicate(1, n);
    const Eigen::MatrixXd Y = y.replicate(1, n);
    const double gap = obj->stacked_value(Y) - obj->stacked_value(X) -
                       (obj->stacked_gradient(X).array() * (Y - X).array()).sum();
    const double sq = (Y - X).squaredNorm();
    CHECK(gap >= c.mu_f / (2.0 * n) * sq - 1e-9);
    CHECK(gap <= c.L_f / (2.0 * n) * sq + 1e-9);
  }
}

TEST_CASE("sum-to-aggregate ratios are exact for the quadratic family") {
  struct Case {
    int n;
    double alpha;
  };
  for (const Case& cs : {Case{4, 1.0}, Case{10, 0.1}, Case{100, 0.01}}) {
    const auto obj = quadratic_family(cs.n, cs.alpha);
    const SpectralConstants c = obj->spectral_constants();
    CHECK(obj->L_sum() / c.L_f == (cs.n + cs.alpha) / (1.0 + cs.alpha));
    CHECK(c.mu_f / obj->mu_sum() == (1.0 + cs.alpha) / cs.alpha);
  }
}

TEST_CASE("spectral constants invariants") {
  SpectralConstants bad;
  bad.mu_f = 0.0;
  bad.L_f = 1.0;
  bad.mu_min = 0.1;
  bad.L_max = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.mu_f = 2.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // mu_f > L_f
  const auto obj = quadratic_family(3, 0.7);
  CHECK(obj->spectral_constants().kappa_f() == 1.0);
}

TEST_SUITE_END();
