#include "doctest.h"
#include "test_util.hpp"

#include "supradiff/error.hpp"
#include "supradiff/kalman.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

using namespace supradiff;

namespace {

ObservationModel scalar_model(bool observed, double r, double q) {
  ObservationModel m;
  m.nodes = 1;
  m.topics = 1;
  if (observed) m.observed = {0};
  m.r_diag = Eigen::VectorXd::Constant(1, r);
  m.q_diag = Eigen::VectorXd::Constant(1, q);
  return m;
}

LearnedOperator scalar_operator(double a) {
  LearnedOperator op;
  op.nodes = 1;
  op.topics = 1;
  op.lambda_hat = Eigen::MatrixXd::Constant(1, 1, a);
  return op;
}

}  // namespace

TEST_CASE("scalar update halves the variance") {
  const KalmanState prior{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1), KalmanPhase::predicted};
  const KalmanState post = kalman_update(prior, Eigen::VectorXd::Ones(1), scalar_model(true, 1.0, 0.0));
  CHECK(post.x_hat(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(post.pi(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(post.phase == KalmanPhase::updated);
  CHECK_THROWS_AS(kalman_update(post, Eigen::VectorXd::Ones(1), scalar_model(true, 1.0, 0.0)),
                  ValidationError);
  CHECK_THROWS_AS(kalman_predict(prior, Eigen::MatrixXd::Zero(1, 1), scalar_model(true, 1.0, 0.0)),
                  ValidationError);
}

TEST_CASE("three-step scalar filter matches the hand recursion") {
  const double a = -0.2, q = 0.05, r = 0.3, m0 = 0.1, p0 = 2.0;
  const std::vector<double> truth{1.0, 0.8, 0.7, 0.5};
  std::vector<StateMatrix> series;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    series.push_back({Eigen::MatrixXd::Constant(1, 1, truth[k]), static_cast<double>(k)});
  }
  const KalmanState prior{Eigen::VectorXd::Constant(1, m0), Eigen::MatrixXd::Constant(1, 1, p0),
                          KalmanPhase::predicted};
  const FilterTrace trace = run_filter(series, scalar_operator(a), scalar_model(true, r, q), prior);
  REQUIRE(trace.steps.size() == 3);

  double x = m0, p = p0;
  auto update = [&](double y) {
    const double k = p / (p + r);
    x += k * (y - x);
    p *= 1 - k;
  };
  update(truth[0]);
  const double f = 1 + a;
  for (std::size_t k = 1; k < truth.size(); ++k) {
    x *= f;
    p = f * p * f + q;
    const FilterStep& s = trace.steps[k - 1];
    CHECK(std::abs(s.predicted.values(0, 0) - x) < 1e-12);
    CHECK(std::abs(s.error_all - std::abs(x - truth[k]) / truth[k]) < 1e-12);
    CHECK(std::abs(s.trace_pi - p) < 1e-12);
    update(truth[k]);
    CHECK(std::abs(s.error_filtered - std::abs(x - truth[k]) / truth[k]) < 1e-12);
  }
}

TEST_CASE("nothing observed: pure prediction, covariance grows by Q") {
  const Index n = 4;
  ObservationModel m = make_observation_model(n, 1, {}, Eigen::VectorXd::Constant(n, 0.1));
  KalmanState s{Eigen::VectorXd::LinSpaced(n, 1, 4), Eigen::MatrixXd::Identity(n, n), KalmanPhase::predicted};
  for (int k = 1; k <= 3; ++k) {
    const KalmanState up = kalman_update(s, Eigen::VectorXd::Constant(n, 99.0), m);
    CHECK(up.x_hat == s.x_hat);
    CHECK(up.pi == s.pi);
    s = kalman_predict(up, Eigen::MatrixXd::Zero(n, n), m);
    CHECK(s.pi.trace() == doctest::Approx(n * (1 + 0.1 * k)));
  }
}

TEST_CASE("everything observed without noise: estimate snaps to the measurement") {
  const Index n = 3;
  ObservationModel m = make_observation_model(n, 2, {0, 1, 2}, Eigen::VectorXd::Zero(2 * n), 0.0);
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = testutil::random_matrix(2 * n, 2 * n, rng);
  const KalmanState prior{Eigen::VectorXd::Zero(2 * n), a * a.transpose() + Eigen::MatrixXd::Identity(2 * n, 2 * n),
                          KalmanPhase::predicted};
  const Eigen::VectorXd y = testutil::random_matrix(2 * n, 1, rng);
  const KalmanState post = kalman_update(prior, y, m);
  CHECK((post.x_hat - y).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(post.pi.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("updates never increase uncertainty") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    const Index n = 3 + trial % 5;
    const Index t = 1 + trial % 3;
    const auto obs = sample_observed_nodes(n, 0.5, static_cast<std::uint64_t>(trial));
    const ObservationModel m = make_observation_model(n, t, obs, Eigen::VectorXd::Constant(n * t, 0.01), 0.05);
    const Eigen::MatrixXd a = testutil::random_matrix(n * t, n * t, rng, -1, 1);
    const KalmanState prior{testutil::random_matrix(n * t, 1, rng), a * a.transpose(), KalmanPhase::predicted};
    const KalmanState post = kalman_update(prior, testutil::random_matrix(n * t, 1, rng), m);
    CHECK(post.pi.trace() <= prior.pi.trace() + 1e-12);
    CHECK((post.pi - post.pi.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diff(prior.pi - post.pi);
    CHECK(diff.eigenvalues().minCoeff() > -1e-10 * (1 + prior.pi.norm()));
  }
}

TEST_CASE("observation masks are nested and sized by rounding") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<Index> prev;
    for (double f : {0.1, 0.15, 0.2, 0.25, 1.0}) {
      const auto s = sample_observed_nodes(40, f, seed);
      CHECK(static_cast<long long>(s.size()) == std::llround(f * 40));
      CHECK(std::is_sorted(s.begin(), s.end()));
      CHECK(std::includes(s.begin(), s.end(), prev.begin(), prev.end()));
      prev = s;
    }
  }
  CHECK(sample_observed_nodes(10, 0.0, 1).empty());
  CHECK_THROWS_AS(sample_observed_nodes(10, 1.5, 1), ValidationError);
}

TEST_CASE("observation model coordinates follow column stacking") {
  const ObservationModel m = make_observation_model(3, 2, {0, 2}, Eigen::VectorXd::Zero(6));
  CHECK(m.observed_coordinates() == std::vector<Index>{0, 2, 3, 5});
  Eigen::VectorXd expected(6);
  expected << 1, 0, 1, 1, 0, 1;
  CHECK(m.mask() == expected);
  CHECK(m.r_diag(0) == kDefaultObservationNoise);
  CHECK(m.r_diag(1) == 0.0);
}

TEST_CASE("default prior uses training moments") {
  SnapshotSeries s;
  Eigen::MatrixXd a(2, 1), b(2, 1), c(2, 1);
  a << 0, 2;
  b << 2, 4;
  c << 100, 100;
  s.snapshots = {{a, 0}, {b, 1}, {c, 2}};
  s.train_end = 2;
  const KalmanState p = default_prior(s);
  CHECK(p.x_hat.isConstant(2.0));
  CHECK(p.pi.isApprox(default_initial_covariance(s)));
  CHECK(p.pi(0, 0) > 0.0);
  CHECK(p.pi(0, 1) == 0.0);
  CHECK(p.phase == KalmanPhase::predicted);
}

TEST_CASE("hidden error is NaN when every node is observed") {
  std::vector<StateMatrix> truth{{Eigen::MatrixXd::Ones(2, 1), 0}, {Eigen::MatrixXd::Ones(2, 1), 1}};
  LearnedOperator op;
  op.nodes = 2;
  op.topics = 1;
  op.lambda_hat = Eigen::MatrixXd::Zero(2, 2);
  const auto m = make_observation_model(2, 1, {0, 1}, Eigen::VectorXd::Zero(2));
  const KalmanState prior{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), KalmanPhase::predicted};
  const FilterTrace tr = run_filter(truth, op, m, prior);
  REQUIRE(tr.steps.size() == 1);
  CHECK(std::isnan(tr.steps[0].error_hidden));
  CHECK(tr.steps[0].error_all < 1e-5);
  CHECK(format_filter_trace_csv(tr).rfind("step,error_all,error_observed,error_hidden,trace_Pi\n", 0) == 0);
}
