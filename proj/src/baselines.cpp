#include "mcs/baselines.hpp"

#include <algorithm>
#include <iterator>
#include <ostream>
#include <stdexcept>

#include "mcs/scores_dist.hpp"

namespace mcs {

CoordinatePredictor::CoordinatePredictor(std::shared_ptr<const Predictor> base, std::size_t coordinate)
    : base_(std::move(base)), coordinate_(coordinate) {
  if (!base_) throw std::invalid_argument("CoordinatePredictor: base predictor is required");
  if (coordinate_ >= base_->response_dim()) throw std::out_of_range("CoordinatePredictor: coordinate out of range");
}

Matrix CoordinatePredictor::predict(const Matrix& x) const {
  return base_->predict(x).col(static_cast<Eigen::Index>(coordinate_));
}

void CoordinatePredictor::save(std::ostream&) const {
  throw std::logic_error("CoordinatePredictor is a view and cannot be saved");
}

namespace {

const Orthant& require_orthant(const TargetRegion& region) {
  const auto* orthant = std::get_if<Orthant>(&region.shape());
  if (!orthant) throw std::invalid_argument("coordinate-wise baselines need an orthant region, got " + region.kind());
  return *orthant;
}

IndexSet intersect(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

IntersectionResult cs_intersection(const LabeledDataset& cal, const UnlabeledDataset& test,
                                   const TargetRegion& orthant, std::shared_ptr<const Predictor> predictor,
                                   double level, Rng& rng, double big_m) {
  const Orthant& shape = require_orthant(orthant);
  const auto d = static_cast<std::size_t>(shape.cutoffs.size());
  if (cal.size() > 0 && cal.response_dim() != d) throw DimensionMismatch("cs_int: response dimension mismatch");
  if (!predictor || predictor->response_dim() != d) throw DimensionMismatch("cs_int: predictor output mismatch");

  IntersectionResult result;
  result.per_dimension.reserve(d);
  for (std::size_t k = 0; k < d; ++k) {
    Rng child = split_stream(rng);
    const TargetRegion half = TargetRegion::half_line(shape.cutoffs[static_cast<Eigen::Index>(k)]);
    DistScore score(half, std::make_shared<CoordinatePredictor>(predictor, k),
                    DistScoreSpec{DistScoreKind::Clipped, big_m, Norm::L2});
    LabeledDataset marginal{cal.x, cal.y.col(static_cast<Eigen::Index>(k))};
    result.per_dimension.push_back(mcs_select(marginal, test, half, score, level, child));
    const IndexSet& chosen = result.per_dimension.back().selected;
    result.selected = k == 0 ? chosen : intersect(result.selected, chosen);
  }
  return result;
}

IntersectionResult cs_int(const LabeledDataset& cal, const UnlabeledDataset& test, const TargetRegion& orthant,
                          std::shared_ptr<const Predictor> predictor, double q, Rng& rng, double big_m) {
  return cs_intersection(cal, test, orthant, std::move(predictor), q, rng, big_m);
}

IntersectionResult cs_ib(const LabeledDataset& cal, const UnlabeledDataset& test, const TargetRegion& orthant,
                         std::shared_ptr<const Predictor> predictor, double q, Rng& rng, double big_m) {
  const double level = q / static_cast<double>(orthant.dimension());
  return cs_intersection(cal, test, orthant, std::move(predictor), level, rng, big_m);
}

std::vector<double> default_level_grid(double q, std::size_t d, std::size_t points) {
  if (points < 1 || d < 1) throw std::invalid_argument("level grid needs points >= 1 and d >= 1");
  const double lo = q / static_cast<double>(d);
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = points == 1 ? q : lo + (q - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

CsIsResult cs_is(const LabeledDataset& cal, const UnlabeledDataset& test, const TargetRegion& orthant,
                 std::shared_ptr<const Predictor> predictor, double q, const CsIsSpec& spec, Rng& rng,
                 double big_m) {
  require_orthant(orthant);
  if (!(spec.holdout_fraction > 0.0 && spec.holdout_fraction < 1.0)) {
    throw std::invalid_argument("cs_is: holdout_fraction must lie in (0, 1)");
  }
  const std::size_t d = orthant.dimension();
  const std::vector<double> grid = spec.level_grid.empty() ? default_level_grid(q, d) : spec.level_grid;
  if (grid.empty()) throw std::invalid_argument("cs_is: empty level grid");

  const std::vector<std::size_t> perm = random_permutation(cal.size(), rng);
  const auto n_hold = static_cast<std::size_t>(spec.holdout_fraction * static_cast<double>(cal.size()));
  const std::vector<std::size_t> hold_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_hold));
  const std::vector<std::size_t> cal_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_hold), perm.end());
  const LabeledDataset cal_prime = subset(cal, cal_rows);
  const LabeledDataset holdout = subset(cal, hold_rows);

  CsIsResult result;
  result.chosen_level = -1.0;
  if (holdout.size() > 0) {
    const std::vector<bool> truth = membership(orthant, holdout.y);
    const UnlabeledDataset hold_x = strip_labels(holdout);
    for (double level : grid) {
      Rng child = split_stream(rng);
      const IntersectionResult sel = cs_intersection(cal_prime, hold_x, orthant, predictor, level, child, big_m);
      const double fdp = fdp_and_power(sel.selected, truth).fdp;
      result.holdout_fdp.push_back(fdp);
      if (fdp <= q && level > result.chosen_level) result.chosen_level = level;
    }
  }
  if (result.chosen_level < 0.0) {
    result.chosen_level = q / static_cast<double>(d);
    result.fell_back = true;
  }
  Rng final_stream = split_stream(rng);
  result.selection = cs_intersection(cal_prime, test, orthant, predictor, result.chosen_level, final_stream, big_m);
  return result;
}

BiResult bi_select(const LabeledDataset& cal, const UnlabeledDataset& test, const TargetRegion& region, double q,
                   Rng& rng, const BiConfig& config) {
  if (cal.size() > 0 && cal.response_dim() != region.dimension()) {
    throw DimensionMismatch("bi: response dimension mismatch");
  }
  const std::vector<std::size_t> perm = random_permutation(cal.size(), rng);
  const std::size_t n_fit = cal.size() / 2;
  const std::vector<std::size_t> fit_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_fit));
  const std::vector<std::size_t> cal_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_fit), perm.end());
  const LabeledDataset fit = subset(cal, fit_rows);
  const LabeledDataset calib = subset(cal, cal_rows);

  // With no rows to fit on, the classifier stays at zero weights (probability 1/2 everywhere).
  auto classifier = std::make_shared<const LogisticModel>(
      fit.size() > 0 ? fit_logistic(fit.x, membership(region, fit.y), config.classifier)
                     : LogisticModel(Vector::Zero(static_cast<Eigen::Index>(test.feature_dim()) + 1)));

  // Binary response 1{y in R} with target [0.5, inf): interior is {1}, the boundary point 0.5
  // zeroes the indicator at test time.
  LabeledDataset binary{calib.x, Matrix(static_cast<Eigen::Index>(calib.size()), 1)};
  const std::vector<bool> in = membership(region, calib.y);
  for (std::size_t i = 0; i < in.size(); ++i) binary.y(static_cast<Eigen::Index>(i), 0) = in[i] ? 1.0 : 0.0;

  const TargetRegion half = TargetRegion::half_line(0.5);
  ProbScore score(half, [classifier](const Matrix& x) { return classifier->predict_prob(x); }, config.big_m);
  return BiResult{mcs_select(binary, test, half, score, q, rng), classifier};
}

}  // namespace mcs
