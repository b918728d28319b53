#include "mcs/softsort.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mcs {

SoftRank::SoftRank(std::span<const double> values, double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("soft_rank: epsilon must be positive");
  if (values.empty()) throw std::invalid_argument("soft_rank: empty input");
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("soft_rank: non-finite input");
  }
  const std::size_t n = values.size();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  // Isotonic (non-increasing) regression of s - w, with s = sorted values / epsilon and
  // w = (n, n-1, ..., 1). Block sums of s and w are kept apart so singleton blocks
  // reproduce w exactly.
  struct Block {
    std::size_t start;
    std::size_t len;
    double sum_s;
    double sum_w;
    double mean() const { return (sum_s - sum_w) / static_cast<double>(len); }
  };
  std::vector<Block> blocks;
  blocks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    blocks.push_back({i, 1, values[order_[i]] / epsilon, static_cast<double>(n - i)});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() <= blocks.back().mean()) {
      Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      prev.len += top.len;
      prev.sum_s += top.sum_s;
      prev.sum_w += top.sum_w;
    }
  }

  ranks_.resize(n);
  block_start_.resize(n);
  block_end_.resize(n);
  for (const Block& b : blocks) {
    const double mean_s = b.sum_s / static_cast<double>(b.len);
    const double mean_w = b.sum_w / static_cast<double>(b.len);
    for (std::size_t i = b.start; i < b.start + b.len; ++i) {
      const double s = values[order_[i]] / epsilon;
      ranks_[order_[i]] = b.len == 1 ? static_cast<double>(n - i) : (s - mean_s) + mean_w;
      block_start_[i] = b.start;
      block_end_[i] = b.start + b.len;
    }
  }
}

std::vector<double> SoftRank::vjp(std::span<const double> upstream) const {
  const std::size_t n = order_.size();
  if (upstream.size() != n) throw std::invalid_argument("soft_rank_vjp: upstream length mismatch");
  // Jacobian in sorted coordinates is (I - block averaging) / epsilon, which is symmetric.
  std::vector<double> grad(n);
  std::size_t i = 0;
  while (i < n) {
    const std::size_t end = block_end_[i];
    double mean = 0.0;
    for (std::size_t k = i; k < end; ++k) mean += upstream[order_[k]];
    mean /= static_cast<double>(end - i);
    for (std::size_t k = i; k < end; ++k) {
      const double g = end - i == 1 ? 0.0 : upstream[order_[k]] - mean;
      grad[order_[k]] = g / epsilon_;
    }
    i = end;
  }
  return grad;
}

std::vector<double> SoftRank::row_gradient(std::size_t i) const {
  std::vector<double> e(order_.size(), 0.0);
  e.at(i) = 1.0;
  return vjp(e);
}

std::vector<double> soft_rank(std::span<const double> values, double epsilon) {
  return SoftRank(values, epsilon).ranks();
}

std::vector<double> soft_rank_vjp(std::span<const double> values, double epsilon, std::span<const double> upstream) {
  return SoftRank(values, epsilon).vjp(upstream);
}

}  // namespace mcs
