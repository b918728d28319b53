#pragma once

#include <functional>
#include <memory>

#include "mcs/conformal.hpp"
#include "mcs/predictors.hpp"
#include "mcs/regions.hpp"

namespace mcs {

enum class DistScoreKind { Regular, Clipped, ProbClipped };

struct DistScoreSpec {
  DistScoreKind kind = DistScoreKind::Clipped;
  double big_m = 1e6;
  Norm norm = Norm::L2;
};

DistScoreKind parse_dist_score_kind(std::string_view text);

// dist(y, R^c) - dist(prediction, R^c)
double score_regular(const TargetRegion& region, const Eigen::Ref<const Vector>& prediction,
                     const Eigen::Ref<const Vector>& y, Norm norm = Norm::L2);

// M * 1{y in interior of R} - dist(prediction, R^c)
double score_clipped(const TargetRegion& region, const Eigen::Ref<const Vector>& prediction,
                     const Eigen::Ref<const Vector>& y, double big_m, Norm norm = Norm::L2);

// M * 1{y in interior of R} - P_hat(y in R | x)
double score_prob_clipped(const TargetRegion& region, double prob_in_region, const Eigen::Ref<const Vector>& y,
                          double big_m);

/// Distance-based score built on a point predictor (regular or clipped kinds).
class DistScore final : public NonconformityScore {
 public:
  DistScore(TargetRegion region, std::shared_ptr<const Predictor> predictor, DistScoreSpec spec = {});

  std::vector<double> score(const Matrix& x, const Matrix& y) const override;

  // Scores from precomputed predictions, one row per sample.
  std::vector<double> score_predictions(const Matrix& predictions, const Matrix& y) const;

 private:
  TargetRegion region_;
  std::shared_ptr<const Predictor> predictor_;
  DistScoreSpec spec_;
};

/// Clipped score whose second term is a predicted probability of lying in the region.
class ProbScore final : public NonconformityScore {
 public:
  using ProbabilityFn = std::function<Vector(const Matrix&)>;

  ProbScore(TargetRegion region, ProbabilityFn prob, double big_m = 1e6);

  std::vector<double> score(const Matrix& x, const Matrix& y) const override;

 private:
  TargetRegion region_;
  ProbabilityFn prob_;
  double big_m_;
};

}  // namespace mcs
