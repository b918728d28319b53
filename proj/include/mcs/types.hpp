#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mcs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;
using IndexSet = std::vector<std::size_t>;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Features plus observed responses, one row per sample.
struct LabeledDataset {
  Matrix x;
  Matrix y;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t response_dim() const { return static_cast<std::size_t>(y.cols()); }
};

// Test points without responses. Methods only ever see this type for test data.
struct UnlabeledDataset {
  Matrix x;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(x.cols()); }
};

LabeledDataset subset(const LabeledDataset& data, const std::vector<std::size_t>& rows);
UnlabeledDataset strip_labels(const LabeledDataset& data);

// Child stream seeded from the parent; consumes one draw of the parent.
inline Rng split_stream(Rng& parent) {
  std::seed_seq seq{parent(), parent()};
  return Rng(seq);
}

inline Rng stream_for(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return Rng(seq);
}

// Uniform draw in (0, 1]; never exactly zero so p-values stay in (0, 1].
inline double uniform_open_closed(Rng& rng) {
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  return static_cast<double>((rng() >> 11) + 1) * scale;
}

// Fisher-Yates with explicit draws (std::shuffle is implementation-defined).
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace mcs
