#include <cmath>

#include "doctest.h"
#include "mcs/simgen.hpp"
#include "test_helpers.hpp"

using namespace mcs;
using mcs::test::vec;

namespace {

Matrix sample_covariance(const Matrix& rows) {
  const Matrix centered = rows.rowwise() - rows.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
}

}  // namespace

TEST_CASE("regression functions on fixed inputs") {
  const Vector zero = Vector::Zero(10);
  CHECK(regression_mu(1, zero, 10).isApproxToConstant(1.5));
  CHECK(regression_mu(4, zero, 10).isApproxToConstant(1.5));
  CHECK(regression_mu(2, zero, 5).isApproxToConstant(0.5));
  // x_k x_{k+1} <= 0 and x_{k+2} = 0 gives (0 - 0.25) + 0.75
  CHECK(regression_mu(3, zero, 3).isApproxToConstant(0.5));

  const Vector x = vec({0.5, 0.5, 0.8});
  CHECK(regression_mu(3, x, 1)[0] == doctest::Approx(0.25 + 0.8 + 0.75));
  const Vector y = vec({0.5, 0.5, 0.2});
  CHECK(regression_mu(3, y, 1)[0] == doctest::Approx(0.75));
  CHECK(regression_mu(2, vec({0.1, 0.0, 0.6}), 1)[0] == doctest::Approx(0.1 + 0.36 + 0.5));
  CHECK_THROWS_AS(regression_mu(7, zero, 2), std::invalid_argument);
}

TEST_CASE("indices wrap modulo p") {
  // Probe vector x_i = 10^i picks out which coordinates each component reads.
  Vector probe(10);
  for (Eigen::Index i = 0; i < 10; ++i) probe[i] = std::pow(10.0, static_cast<double>(i) - 5.0);
  const Vector mu = regression_mu(1, probe, 10);
  // component 10 (index 9) uses x_10, x_1, x_2
  CHECK(mu[9] == doctest::Approx(probe[9] - 0.5 * probe[0] + probe[1] + 1.5));
  CHECK(mu[0] == doctest::Approx(probe[0] - 0.5 * probe[1] + probe[2] + 1.5));
  // d > p wraps as well
  const Vector wide = regression_mu(1, probe, 30);
  CHECK(wide[25] == doctest::Approx(mu[5]));
}

TEST_CASE("covariates are uniform on (-1, 1)") {
  Rng rng(3);
  const Matrix x = gen_covariates(20000, 3, rng);
  CHECK(x.minCoeff() > -1.0);
  CHECK(x.maxCoeff() < 1.0);
  CHECK(std::abs(x.mean()) < 0.02);
  CHECK((x.array().square().mean()) == doctest::Approx(1.0 / 3.0).epsilon(0.03));
}

TEST_CASE("Gaussian noise covariance matches the scale matrix") {
  Rng rng(17);
  const Matrix eps = gen_noise(1, 100000, 4, rng);
  const Matrix diff = sample_covariance(eps) - noise_scale(4);
  CHECK(diff.cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("t noise covariance is three times the scale matrix") {
  Rng rng(18);
  const Matrix eps = gen_noise(5, 100000, 3, rng);
  const Matrix diff = sample_covariance(eps) - 3.0 * noise_scale(3);
  CHECK(diff.cwiseAbs().maxCoeff() < 0.15);
}

TEST_CASE("datasets have the requested shapes and are reproducible") {
  SimConfig config;
  config.setting = 2;
  config.d = 5;
  config.n_train = 30;
  config.n_cal = 20;
  config.m = 7;
  config.seed = 42;
  const SimDatasets a = gen_dataset(config);
  CHECK(a.train.size() == 30);
  CHECK(a.cal.size() == 20);
  CHECK(a.test.size() == 7);
  CHECK(a.train.feature_dim() == 10);
  CHECK(a.test.response_dim() == 5);
  const SimDatasets b = gen_dataset(config);
  CHECK(a.train.x == b.train.x);
  CHECK(a.cal.y == b.cal.y);
  CHECK(a.test.y == b.test.y);
  config.seed = 43;
  CHECK(gen_dataset(config).train.x != a.train.x);
  config.setting = 0;
  CHECK_THROWS_AS(gen_dataset(config), std::invalid_argument);
}

TEST_CASE("tabulated task regions") {
  const TargetRegion t1 = task_region(1, 30);
  CHECK(t1.kind() == "orthant");
  CHECK(std::get<Orthant>(t1.shape()).cutoffs.isApproxToConstant(-0.6));
  const TargetRegion t2 = task_region(2, 10);
  CHECK(std::get<Ball>(t2.shape()).center.isApproxToConstant(2.0));
  CHECK(std::get<Ball>(t2.shape()).radius == 4.1);
  CHECK(std::get<BallComplement>(task_region(4, 30).shape()).radius == 9.5);
  CHECK(std::get<OrthantComplement>(task_region(3, 5).shape()).cutoffs.isApproxToConstant(-0.8));
  CHECK(std::get<OrthantComplement>(task_region(3, 10).shape()).cutoffs.isApproxToConstant(-1.1));
  CHECK(std::get<OrthantComplement>(task_region(3, 30).shape()).cutoffs.isApproxToConstant(-1.6));
  CHECK_THROWS_AS(task_region(1, 7), std::invalid_argument);
  CHECK_THROWS_AS(task_region(5, 10), std::invalid_argument);
}
