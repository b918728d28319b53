#pragma once

#include <span>
#include <vector>

#include "mcs/regions.hpp"
#include "mcs/types.hpp"

namespace mcs {

/// Conformal p-values, every entry in (0, 1].
class PValueVector {
 public:
  PValueVector() = default;
  explicit PValueVector(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }

 private:
  std::vector<double> values_;
};

struct SelectionResult {
  IndexSet selected;  // 0-based, ascending
  std::size_t k_star = 0;
  double threshold = 0.0;  // q * k_star / m
  PValueVector p_values;
};

/// A nonconformity rule V(x, y), evaluated row-wise.
class NonconformityScore {
 public:
  virtual ~NonconformityScore() = default;
  virtual std::vector<double> score(const Matrix& x, const Matrix& y) const = 0;
};

/// Randomized conformal p-values with one U_j ~ Unif(0,1] drawn per test point in index order:
///   p_j = (#{V_i < T_j} + U_j * (1 + #{V_i = T_j})) / (n + 1).
PValueVector conformal_p_values(std::span<const double> cal_scores, std::span<const double> test_scores,
                                Rng& rng);

/// Same formula with caller-supplied tie-break draws (one per test score).
PValueVector conformal_p_values(std::span<const double> cal_scores, std::span<const double> test_scores,
                                std::span<const double> tie_breaks);

/// Benjamini-Hochberg step-up rule at level q in (0, 1).
SelectionResult bh_select(const PValueVector& p_values, double q);

/// Calibration scores at observed responses, test scores at the region's boundary point,
/// then conformal p-values and BH. The score must be regionally monotone.
SelectionResult mcs_select(const LabeledDataset& cal, const UnlabeledDataset& test, const TargetRegion& region,
                           const NonconformityScore& score, double q, Rng& rng);

/// Test responses replaced by the boundary point, row-broadcast to m rows.
Matrix boundary_responses(const TargetRegion& region, std::size_t m);

struct SelectionMetrics {
  double fdp = 0.0;
  double power = 0.0;
};

/// False discovery proportion (0/0 = 0) and power (0 when nothing is truly in the region).
SelectionMetrics fdp_and_power(const IndexSet& selected, const std::vector<bool>& truth_in_region);

std::vector<bool> membership(const TargetRegion& region, const Matrix& y);

}  // namespace mcs
