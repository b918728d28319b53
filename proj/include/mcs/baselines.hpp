#pragma once

#include <memory>

#include "mcs/conformal.hpp"
#include "mcs/predictors.hpp"
#include "mcs/regions.hpp"

namespace mcs {

// Coordinate-wise adaptations of univariate conformal selection plus the binarized-response
// reduction. cs_int / cs_ib / cs_is need an orthant region; bi works for any region.

struct IntersectionResult {
  IndexSet selected;
  std::vector<SelectionResult> per_dimension;
};

/// Exposes one output coordinate of a multi-output predictor.
class CoordinatePredictor final : public Predictor {
 public:
  CoordinatePredictor(std::shared_ptr<const Predictor> base, std::size_t coordinate);

  Matrix predict(const Matrix& x) const override;
  std::size_t feature_dim() const override { return base_->feature_dim(); }
  std::size_t response_dim() const override { return 1; }
  void save(std::ostream& out) const override;

 private:
  std::shared_ptr<const Predictor> base_;
  std::size_t coordinate_;
};

/// Per-dimension clipped-score selection on the half-line {y_k >= c_k} at level `level`,
/// then the intersection. Each dimension draws from its own child stream.
IntersectionResult cs_intersection(const LabeledDataset& cal, const UnlabeledDataset& test,
                                   const TargetRegion& orthant, std::shared_ptr<const Predictor> predictor,
                                   double level, Rng& rng, double big_m = 1e6);

/// Every dimension at level q.
IntersectionResult cs_int(const LabeledDataset& cal, const UnlabeledDataset& test, const TargetRegion& orthant,
                          std::shared_ptr<const Predictor> predictor, double q, Rng& rng, double big_m = 1e6);

/// Bonferroni: every dimension at level q / d.
IntersectionResult cs_ib(const LabeledDataset& cal, const UnlabeledDataset& test, const TargetRegion& orthant,
                         std::shared_ptr<const Predictor> predictor, double q, Rng& rng, double big_m = 1e6);

struct CsIsSpec {
  double holdout_fraction = 0.5;
  std::vector<double> level_grid;  // empty: 20 evenly spaced levels in [q/d, q]
};

std::vector<double> default_level_grid(double q, std::size_t d, std::size_t points = 20);

struct CsIsResult {
  IntersectionResult selection;
  double chosen_level = 0.0;
  bool fell_back = false;
  std::vector<double> holdout_fdp;  // per grid level
};

/// Splits calibration into cal' and a hold-out; picks the largest common per-dimension level
/// whose hold-out FDP is <= q (Bonferroni level q/d when none passes); selects on test with cal'.
CsIsResult cs_is(const LabeledDataset& cal, const UnlabeledDataset& test, const TargetRegion& orthant,
                 std::shared_ptr<const Predictor> predictor, double q, const CsIsSpec& spec, Rng& rng,
                 double big_m = 1e6);

struct BiConfig {
  LogisticConfig classifier;
  double big_m = 1e6;
};

struct BiResult {
  SelectionResult selection;
  std::shared_ptr<const LogisticModel> classifier;
};

/// Binarizes responses to 1{y in R}, fits a logistic classifier on half of the calibration
/// data and runs clipped-probability conformal selection on the other half.
BiResult bi_select(const LabeledDataset& cal, const UnlabeledDataset& test, const TargetRegion& region, double q,
                   Rng& rng, const BiConfig& config = {});

}  // namespace mcs
