#include "mcs/types.hpp"

#include <numeric>

namespace mcs {

LabeledDataset subset(const LabeledDataset& data, const std::vector<std::size_t>& rows) {
  LabeledDataset out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), data.x.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()), data.y.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.x.row(static_cast<Eigen::Index>(i)) = data.x.row(r);
    out.y.row(static_cast<Eigen::Index>(i)) = data.y.row(r);
  }
  return out;
}

UnlabeledDataset strip_labels(const LabeledDataset& data) { return UnlabeledDataset{data.x}; }

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    // Lemire-free modulo draw; bias is below 2^-40 for the sizes used here.
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace mcs
