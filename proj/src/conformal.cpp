#include "mcs/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mcs {

PValueVector::PValueVector(std::vector<double> values) : values_(std::move(values)) {
  for (double p : values_) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p-values must lie in (0, 1]");
  }
}

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double s : v) {
    if (!std::isfinite(s)) throw std::invalid_argument(std::string(what) + " contain a non-finite value");
  }
}

}  // namespace

PValueVector conformal_p_values(std::span<const double> cal_scores, std::span<const double> test_scores,
                                std::span<const double> tie_breaks) {
  if (test_scores.empty()) throw std::invalid_argument("conformal_p_values: no test scores");
  if (tie_breaks.size() != test_scores.size()) {
    throw DimensionMismatch("conformal_p_values: one tie-break draw is needed per test score");
  }
  require_finite(cal_scores, "calibration scores");
  require_finite(test_scores, "test scores");

  std::vector<double> sorted(cal_scores.begin(), cal_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double denom = static_cast<double>(sorted.size() + 1);

  std::vector<double> p(test_scores.size());
  for (std::size_t j = 0; j < test_scores.size(); ++j) {
    const double u = tie_breaks[j];
    if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("tie-break draws must lie in (0, 1]");
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), test_scores[j]);
    auto hi = std::upper_bound(lo, sorted.end(), test_scores[j]);
    const auto below = static_cast<double>(lo - sorted.begin());
    const auto ties = static_cast<double>(hi - lo);
    p[j] = std::min(1.0, (below + u * (1.0 + ties)) / denom);
  }
  return PValueVector(std::move(p));
}

PValueVector conformal_p_values(std::span<const double> cal_scores, std::span<const double> test_scores,
                                Rng& rng) {
  std::vector<double> u(test_scores.size());
  for (double& draw : u) draw = uniform_open_closed(rng);
  return conformal_p_values(cal_scores, test_scores, u);
}

SelectionResult bh_select(const PValueVector& p_values, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("q must lie in (0, 1)");
  const std::size_t m = p_values.size();
  SelectionResult result;
  result.p_values = p_values;
  if (m == 0) return result;

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

  // #{p_j <= qk/m} >= k holds iff the k-th smallest p-value is <= qk/m.
  const double md = static_cast<double>(m);
  for (std::size_t k = m; k >= 1; --k) {
    if (p_values[order[k - 1]] <= q * static_cast<double>(k) / md) {
      result.k_star = k;
      break;
    }
  }
  result.threshold = q * static_cast<double>(result.k_star) / md;
  if (result.k_star > 0) {
    for (std::size_t j = 0; j < m; ++j) {
      if (p_values[j] <= result.threshold) result.selected.push_back(j);
    }
  }
  return result;
}

Matrix boundary_responses(const TargetRegion& region, std::size_t m) {
  const Vector r = boundary_point(region);
  return r.transpose().replicate(static_cast<Eigen::Index>(m), 1);
}

SelectionResult mcs_select(const LabeledDataset& cal, const UnlabeledDataset& test, const TargetRegion& region,
                           const NonconformityScore& score, double q, Rng& rng) {
  if (cal.size() > 0 && cal.response_dim() != region.dimension()) {
    throw DimensionMismatch("calibration responses do not match the region dimension");
  }
  if (cal.size() > 0 && cal.feature_dim() != test.feature_dim()) {
    throw DimensionMismatch("calibration and test features differ in width");
  }
  const std::vector<double> cal_scores = cal.size() > 0 ? score.score(cal.x, cal.y) : std::vector<double>{};
  const std::vector<double> test_scores = score.score(test.x, boundary_responses(region, test.size()));
  return bh_select(conformal_p_values(cal_scores, test_scores, rng), q);
}

SelectionMetrics fdp_and_power(const IndexSet& selected, const std::vector<bool>& truth_in_region) {
  std::size_t true_sel = 0;
  for (std::size_t j : selected) {
    if (j >= truth_in_region.size()) throw std::out_of_range("selected index out of range");
    if (truth_in_region[j]) ++true_sel;
  }
  const std::size_t false_sel = selected.size() - true_sel;
  const auto positives = static_cast<std::size_t>(std::count(truth_in_region.begin(), truth_in_region.end(), true));
  SelectionMetrics out;
  out.fdp = static_cast<double>(false_sel) / static_cast<double>(std::max<std::size_t>(selected.size(), 1));
  out.power = positives == 0 ? 0.0 : static_cast<double>(true_sel) / static_cast<double>(positives);
  return out;
}

std::vector<bool> membership(const TargetRegion& region, const Matrix& y) {
  std::vector<bool> in(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) in[static_cast<std::size_t>(i)] = contains(region, y.row(i).transpose());
  return in;
}

}  // namespace mcs
