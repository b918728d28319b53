#include <cmath>

#include "doctest.h"
#include "mcs/scores_dist.hpp"
#include "test_helpers.hpp"

using namespace mcs;
using mcs::test::uniform;
using mcs::test::vec;

namespace {

class FixedPredictor final : public Predictor {
 public:
  explicit FixedPredictor(Vector value) : value_(std::move(value)) {}
  Matrix predict(const Matrix& x) const override { return value_.transpose().replicate(x.rows(), 1); }
  std::size_t feature_dim() const override { return 1; }
  std::size_t response_dim() const override { return static_cast<std::size_t>(value_.size()); }
  void save(std::ostream&) const override {}

 private:
  Vector value_;
};

}  // namespace

TEST_CASE("regular and clipped scores on worked examples") {
  const TargetRegion orthant = TargetRegion::orthant(vec({0, 0}));
  CHECK(score_regular(orthant, vec({1, 2}), vec({3, 3})) == doctest::Approx(3.0 - 1.0));
  CHECK(score_regular(orthant, vec({1, 2}), vec({-1, 3})) == doctest::Approx(-1.0));
  CHECK(score_clipped(orthant, vec({1, 2}), vec({3, 3}), 100.0) == doctest::Approx(99.0));
  CHECK(score_clipped(orthant, vec({1, 2}), vec({0, 3}), 100.0) == doctest::Approx(-1.0));
  CHECK(score_clipped(orthant, vec({-1, 2}), vec({-1, 3}), 100.0) == 0.0);
  const TargetRegion ball = TargetRegion::ball(vec({0, 0}), 2.0);
  CHECK(score_regular(ball, vec({0, 0}), vec({1, 0})) == doctest::Approx(1.0 - 2.0));
  CHECK(score_prob_clipped(ball, 0.25, vec({1, 0}), 10.0) == doctest::Approx(9.75));
  CHECK(score_prob_clipped(ball, 0.25, vec({5, 0}), 10.0) == doctest::Approx(-0.25));
  CHECK_THROWS_AS(score_prob_clipped(ball, 1.5, vec({5, 0}), 10.0), std::invalid_argument);
}

TEST_CASE("scores are regionally monotone") {
  // For y in R and y' outside the interior, V(x, y) >= V(x, y') at a fixed prediction.
  Rng rng(77);
  const std::vector<TargetRegion> regions{
      TargetRegion::orthant(vec({0.2, -0.2, 0.5})), TargetRegion::ball(vec({1, 1, 1}), 1.5),
      TargetRegion::ball_complement(vec({0, 0, 0}), 1.2), TargetRegion::orthant_complement(vec({0.3, 0.3, 0.3}))};
  std::size_t checked = 0;
  for (const TargetRegion& region : regions) {
    for (int rep = 0; rep < 10000; ++rep) {
      const Vector mu = test::random_matrix(3, 1, rng, -3, 3);
      const Vector y = test::random_matrix(3, 1, rng, -3, 3);
      const Vector y2 = test::random_matrix(3, 1, rng, -3, 3);
      if (!contains(region, y) || interior_contains(region, y2)) continue;
      ++checked;
      CHECK(score_regular(region, mu, y) >= score_regular(region, mu, y2));
      CHECK(score_clipped(region, mu, y, 1e6) >= score_clipped(region, mu, y2, 1e6));
      const double prob = uniform(rng, 0, 1);
      CHECK(score_prob_clipped(region, prob, y, 1e6) >= score_prob_clipped(region, prob, y2, 1e6));
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("the boundary point attains the clipped score minimum over the complement of the interior") {
  Rng rng(9);
  const TargetRegion region = TargetRegion::ball(vec({2, 2}), 1.5);
  const Vector r = boundary_point(region);
  const Vector mu = vec({0.5, 3});
  for (int rep = 0; rep < 1000; ++rep) {
    const Vector y = test::random_matrix(2, 1, rng, -2, 6);
    if (interior_contains(region, y)) continue;
    CHECK(score_clipped(region, mu, r, 1e6) == score_clipped(region, mu, y, 1e6));
  }
}

TEST_CASE("DistScore batches rows through the predictor") {
  const TargetRegion region = TargetRegion::orthant(vec({0, 0}));
  auto predictor = std::make_shared<FixedPredictor>(vec({1, 2}));
  DistScore clipped(region, predictor, DistScoreSpec{DistScoreKind::Clipped, 50.0, Norm::L2});
  DistScore regular(region, predictor, DistScoreSpec{DistScoreKind::Regular, 50.0, Norm::L2});
  Matrix y(3, 2);
  y << 3, 3, -1, 3, 0, 0;
  const Matrix x = Matrix::Zero(3, 1);
  const std::vector<double> c = clipped.score(x, y);
  CHECK(c[0] == doctest::Approx(49.0));
  CHECK(c[1] == doctest::Approx(-1.0));
  CHECK(c[2] == doctest::Approx(-1.0));
  const std::vector<double> r = regular.score(x, y);
  CHECK(r[0] == doctest::Approx(2.0));
  CHECK(r[2] == doctest::Approx(-1.0));
  CHECK_THROWS_AS(DistScore(region, predictor, DistScoreSpec{DistScoreKind::ProbClipped, 50.0, Norm::L2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(clipped.score(x, Matrix::Zero(3, 3)), DimensionMismatch);
}

TEST_CASE("ProbScore uses the probability callback") {
  const TargetRegion half = TargetRegion::half_line(0.5);
  ProbScore score(half, [](const Matrix& x) { return Vector(x.col(0)); }, 10.0);
  Matrix x(2, 1);
  x << 0.2, 0.9;
  Matrix y(2, 1);
  y << 1.0, 0.0;
  const std::vector<double> v = score.score(x, y);
  CHECK(v[0] == doctest::Approx(9.8));
  CHECK(v[1] == doctest::Approx(-0.9));
  CHECK_THROWS_AS(ProbScore(half, [](const Matrix& x) { return Vector(x.col(0)); }, 1.5), std::invalid_argument);
}

TEST_CASE("score kind parsing") {
  CHECK(parse_dist_score_kind("regular") == DistScoreKind::Regular);
  CHECK(parse_dist_score_kind("clipped") == DistScoreKind::Clipped);
  CHECK_THROWS_AS(parse_dist_score_kind("banana"), std::invalid_argument);
}
