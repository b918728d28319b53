#pragma once

#include <span>
#include <vector>

namespace mcs {

struct SoftRankConfig {
  double epsilon = 0.1;
};

// l2-regularized soft ranks: the Euclidean projection of values / epsilon onto the
// permutahedron of (1, ..., n). Ascending: the largest value gets the largest rank.
// Computed with one sort and a pool-adjacent-violators pass, O(n log n).
//
// As epsilon -> 0 distinct values recover hard ranks; tied values share their average
// rank; the output always sums to n(n+1)/2.
std::vector<double> soft_rank(std::span<const double> values, double epsilon);

// Gradient of <upstream, soft_rank(values)> with respect to values.
std::vector<double> soft_rank_vjp(std::span<const double> values, double epsilon, std::span<const double> upstream);

// Forward pass that keeps what the backward pass needs, for repeated VJPs.
class SoftRank {
 public:
  SoftRank(std::span<const double> values, double epsilon);

  const std::vector<double>& ranks() const { return ranks_; }
  std::vector<double> vjp(std::span<const double> upstream) const;
  // Derivative of ranks()[i] with respect to every input.
  std::vector<double> row_gradient(std::size_t i) const;

 private:
  double epsilon_;
  std::vector<std::size_t> order_;       // sorted position -> original index (descending values)
  std::vector<std::size_t> block_end_;   // per sorted position: one past the end of its block
  std::vector<std::size_t> block_start_;
  std::vector<double> ranks_;
};

}  // namespace mcs
