#include <algorithm>

#include "doctest.h"
#include "mcs/baselines.hpp"
#include "mcs/scores_dist.hpp"
#include "test_helpers.hpp"

using namespace mcs;
using mcs::test::random_matrix;
using mcs::test::vec;

namespace {

struct Problem {
  LabeledDataset cal;
  UnlabeledDataset test;
  std::shared_ptr<const Predictor> predictor;
};

Problem make_problem(std::size_t d, std::uint64_t seed, std::size_t n = 200, std::size_t m = 50) {
  Rng rng(seed);
  LabeledDataset train{random_matrix(static_cast<Eigen::Index>(n), 2, rng), Matrix()};
  auto response = [&](const Matrix& x) {
    Matrix y(x.rows(), static_cast<Eigen::Index>(d));
    const Matrix noise = random_matrix(x.rows(), static_cast<Eigen::Index>(d), rng, -0.3, 0.3);
    for (Eigen::Index k = 0; k < y.cols(); ++k) y.col(k) = x.col(0) + 0.5 * x.col(1) + noise.col(k);
    return y;
  };
  train.y = response(train.x);
  LabeledDataset cal{random_matrix(static_cast<Eigen::Index>(n), 2, rng), Matrix()};
  cal.y = response(cal.x);
  UnlabeledDataset test{random_matrix(static_cast<Eigen::Index>(m), 2, rng)};
  return {cal, test, std::make_shared<RidgeModel>(fit_ridge(train.x, train.y, 0.0))};
}

}  // namespace

TEST_CASE("with d = 1, cs_int and cs_ib reduce to univariate selection") {
  const Problem prob = make_problem(1, 5);
  const TargetRegion orthant = TargetRegion::orthant(vec({0.3}));
  Rng a(9), b(9), c(9);
  const IntersectionResult inter = cs_int(prob.cal, prob.test, orthant, prob.predictor, 0.2, a);
  const IntersectionResult bonf = cs_ib(prob.cal, prob.test, orthant, prob.predictor, 0.2, b);
  // the single dimension runs on the first child stream
  Rng child = split_stream(c);
  const TargetRegion half = TargetRegion::half_line(0.3);
  DistScore score(half, prob.predictor, DistScoreSpec{DistScoreKind::Clipped, 1e6, Norm::L2});
  const SelectionResult direct = mcs_select(prob.cal, prob.test, half, score, 0.2, child);
  CHECK(inter.selected == direct.selected);
  CHECK(bonf.selected == direct.selected);
  CHECK_FALSE(direct.selected.empty());
}

TEST_CASE("an empty per-dimension selection empties the intersection") {
  const Problem prob = make_problem(3, 6);
  // Cutoff far above every response in dimension 2 only.
  const TargetRegion orthant = TargetRegion::orthant(vec({-5.0, -5.0, 50.0}));
  Rng rng(1);
  const IntersectionResult r = cs_int(prob.cal, prob.test, orthant, prob.predictor, 0.3, rng);
  REQUIRE(r.per_dimension.size() == 3);
  CHECK(r.per_dimension[2].selected.empty());
  CHECK(r.selected.empty());
}

TEST_CASE("intersection is a subset of every dimension") {
  const Problem prob = make_problem(4, 8);
  const TargetRegion orthant = TargetRegion::orthant(Vector::Constant(4, 0.2));
  Rng rng(3);
  const IntersectionResult r = cs_int(prob.cal, prob.test, orthant, prob.predictor, 0.3, rng);
  for (const SelectionResult& dim : r.per_dimension) {
    CHECK(std::includes(dim.selected.begin(), dim.selected.end(), r.selected.begin(), r.selected.end()));
  }
}

TEST_CASE("coordinate baselines reject non-orthant regions") {
  const Problem prob = make_problem(2, 1);
  Rng rng(1);
  CHECK_THROWS_AS(cs_int(prob.cal, prob.test, TargetRegion::ball(vec({0, 0}), 1.0), prob.predictor, 0.3, rng),
                  std::invalid_argument);
  CsIsSpec spec;
  spec.level_grid = {};
  CHECK_THROWS_AS(cs_is(prob.cal, prob.test, TargetRegion::ball(vec({0, 0}), 1.0), prob.predictor, 0.3, spec, rng),
                  std::invalid_argument);
  spec.holdout_fraction = 1.0;
  CHECK_THROWS_AS(cs_is(prob.cal, prob.test, TargetRegion::orthant(vec({0, 0})), prob.predictor, 0.3, spec, rng),
                  std::invalid_argument);
}

TEST_CASE("cs_ib uses level q / d") {
  const std::vector<double> grid = default_level_grid(0.3, 30);
  CHECK(grid.size() == 20);
  CHECK(grid.front() == doctest::Approx(0.01));
  CHECK(grid.back() == doctest::Approx(0.3));
  const Problem prob = make_problem(3, 12);
  const TargetRegion orthant = TargetRegion::orthant(Vector::Constant(3, 0.0));
  Rng a(4), b(4);
  const IntersectionResult bonf = cs_ib(prob.cal, prob.test, orthant, prob.predictor, 0.3, a);
  const IntersectionResult manual = cs_intersection(prob.cal, prob.test, orthant, prob.predictor, 0.1, b);
  CHECK(bonf.selected == manual.selected);
}

TEST_CASE("cs_is with a single-level grid") {
  const Problem prob = make_problem(2, 21, 300);
  const TargetRegion orthant = TargetRegion::orthant(Vector::Constant(2, 0.2));
  CsIsSpec spec;
  spec.level_grid = {0.3};
  Rng rng(77);
  const CsIsResult r = cs_is(prob.cal, prob.test, orthant, prob.predictor, 0.3, spec, rng);
  REQUIRE(r.holdout_fdp.size() == 1);
  if (r.holdout_fdp[0] <= 0.3) {
    CHECK_FALSE(r.fell_back);
    CHECK(r.chosen_level == 0.3);
  } else {
    CHECK(r.fell_back);
    CHECK(r.chosen_level == doctest::Approx(0.15));
  }
}

TEST_CASE("cs_is picks the largest passing level, falls back when none passes") {
  const Problem prob = make_problem(3, 33, 300);
  const TargetRegion orthant = TargetRegion::orthant(Vector::Constant(3, 0.0));
  CsIsSpec spec;
  Rng rng(5);
  const CsIsResult r = cs_is(prob.cal, prob.test, orthant, prob.predictor, 0.3, spec, rng);
  const std::vector<double> grid = default_level_grid(0.3, 3);
  REQUIRE(r.holdout_fdp.size() == grid.size());
  double expected = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (r.holdout_fdp[i] <= 0.3) expected = std::max(expected, grid[i]);
  }
  if (expected < 0) {
    CHECK(r.fell_back);
    CHECK(r.chosen_level == doctest::Approx(0.1));
  } else {
    CHECK(r.chosen_level == expected);
  }

  // No calibration row is in the region, so nothing can be selected and FDP 0 passes.
  LabeledDataset outside = prob.cal;
  outside.y = -outside.y.array().abs() - 1.0;
  spec.level_grid = {0.3};
  Rng rng2(6);
  const CsIsResult none = cs_is(outside, prob.test, orthant, prob.predictor, 0.3, spec, rng2);
  CHECK(none.holdout_fdp[0] == 0.0);
  CHECK_FALSE(none.fell_back);

  // A single very permissive level selects false positives on the hold-out at q = 0.01.
  spec.level_grid = {0.9};
  Rng rng3(7);
  const CsIsResult loose = cs_is(prob.cal, prob.test, orthant, prob.predictor, 0.01, spec, rng3);
  REQUIRE(loose.holdout_fdp[0] > 0.01);
  CHECK(loose.fell_back);
  CHECK(loose.chosen_level == doctest::Approx(0.01 / 3));
}

TEST_CASE("bi with a constant classifier lets U drive the p-values") {
  // Features carry no information and all labels share a class: logistic weights stay
  // symmetric, so every test score is identical.
  Rng rng(2);
  LabeledDataset cal{Matrix::Zero(40, 1), Matrix::Constant(40, 2, -3.0)};
  UnlabeledDataset test{Matrix::Zero(10, 1)};
  const TargetRegion region = TargetRegion::ball(vec({0, 0}), 1.0);
  const BiResult r = bi_select(cal, test, region, 0.3, rng);
  const Vector prob = r.classifier->predict_prob(test.x);
  CHECK(prob.isApproxToConstant(prob[0]));
  // All calibration scores tie with every test score: p = U (n + 1) / (n + 1) = U.
  for (std::size_t j = 0; j < 10; ++j) {
    CHECK(r.selection.p_values[j] > 0.0);
    CHECK(r.selection.p_values[j] <= 1.0);
  }
}

TEST_CASE("bi works for any region and selects clear in-region rows") {
  Rng rng(4);
  const Matrix x = random_matrix(400, 1, rng, -1, 1);
  Matrix y(400, 2);
  for (Eigen::Index i = 0; i < 400; ++i) y.row(i) = x(i, 0) > 0 ? Eigen::RowVector2d(0.0, 0.0) : Eigen::RowVector2d(5, 5);
  LabeledDataset cal{x, y};
  Matrix tx(20, 1);
  for (Eigen::Index i = 0; i < 20; ++i) tx(i, 0) = i < 10 ? 0.9 : -0.9;
  const TargetRegion region = TargetRegion::ball(vec({0, 0}), 1.0);
  const BiResult r = bi_select(cal, UnlabeledDataset{tx}, region, 0.2, rng);
  IndexSet expected;
  for (std::size_t j = 0; j < 10; ++j) expected.push_back(j);
  CHECK(r.selection.selected == expected);
  CHECK_THROWS_AS(bi_select(LabeledDataset{x, Matrix::Zero(400, 3)}, UnlabeledDataset{tx}, region, 0.2, rng),
                  DimensionMismatch);
}
