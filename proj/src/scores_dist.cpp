#include "mcs/scores_dist.hpp"

#include <cmath>
#include <stdexcept>

namespace mcs {

DistScoreKind parse_dist_score_kind(std::string_view text) {
  if (text == "regular") return DistScoreKind::Regular;
  if (text == "clipped") return DistScoreKind::Clipped;
  if (text == "prob_clipped") return DistScoreKind::ProbClipped;
  throw std::invalid_argument("unknown score kind '" + std::string(text) + "'");
}

double score_regular(const TargetRegion& region, const Eigen::Ref<const Vector>& prediction,
                     const Eigen::Ref<const Vector>& y, Norm norm) {
  return dist_to_complement(region, y, norm) - dist_to_complement(region, prediction, norm);
}

double score_clipped(const TargetRegion& region, const Eigen::Ref<const Vector>& prediction,
                     const Eigen::Ref<const Vector>& y, double big_m, Norm norm) {
  const double indicator = interior_contains(region, y) ? big_m : 0.0;
  return indicator - dist_to_complement(region, prediction, norm);
}

double score_prob_clipped(const TargetRegion& region, double prob_in_region, const Eigen::Ref<const Vector>& y,
                          double big_m) {
  if (!(prob_in_region >= 0.0 && prob_in_region <= 1.0)) {
    throw std::invalid_argument("probability must lie in [0, 1]");
  }
  return (interior_contains(region, y) ? big_m : 0.0) - prob_in_region;
}

DistScore::DistScore(TargetRegion region, std::shared_ptr<const Predictor> predictor, DistScoreSpec spec)
    : region_(std::move(region)), predictor_(std::move(predictor)), spec_(spec) {
  if (!predictor_) throw std::invalid_argument("DistScore: predictor is required");
  if (spec_.kind == DistScoreKind::ProbClipped) {
    throw std::invalid_argument("DistScore: prob_clipped needs a probability model (use ProbScore)");
  }
  if (!(spec_.big_m > 0.0) || !std::isfinite(spec_.big_m)) throw std::invalid_argument("big_m must be positive");
  if (predictor_->response_dim() != region_.dimension()) {
    throw DimensionMismatch("DistScore: predictor output does not match region dimension");
  }
}

std::vector<double> DistScore::score(const Matrix& x, const Matrix& y) const {
  return score_predictions(predictor_->predict(x), y);
}

std::vector<double> DistScore::score_predictions(const Matrix& predictions, const Matrix& y) const {
  if (predictions.rows() != y.rows()) throw DimensionMismatch("DistScore: row count mismatch");
  std::vector<double> out(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const Vector pred = predictions.row(i).transpose();
    const Vector yi = y.row(i).transpose();
    out[static_cast<std::size_t>(i)] = spec_.kind == DistScoreKind::Regular
                                           ? score_regular(region_, pred, yi, spec_.norm)
                                           : score_clipped(region_, pred, yi, spec_.big_m, spec_.norm);
  }
  return out;
}

ProbScore::ProbScore(TargetRegion region, ProbabilityFn prob, double big_m)
    : region_(std::move(region)), prob_(std::move(prob)), big_m_(big_m) {
  if (!prob_) throw std::invalid_argument("ProbScore: probability function is required");
  if (!(big_m_ > 2.0) || !std::isfinite(big_m_)) throw std::invalid_argument("ProbScore: big_m must exceed 2");
}

std::vector<double> ProbScore::score(const Matrix& x, const Matrix& y) const {
  const Vector p = prob_(x);
  if (p.size() != y.rows()) throw DimensionMismatch("ProbScore: row count mismatch");
  std::vector<double> out(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = score_prob_clipped(region_, p[i], y.row(i).transpose(), big_m_);
  }
  return out;
}

}  // namespace mcs
