#pragma once

#include "mcs/regions.hpp"
#include "mcs/types.hpp"

namespace mcs {

// Synthetic data: x ~ Unif(-1,1)^p, y = mu(x) + eps.
// Settings 1-3 use Gaussian noise, 4-6 multivariate t with 3 degrees of freedom;
// settings k and k+3 share the regression function.
struct SimConfig {
  int setting = 1;
  int task = 1;
  std::size_t d = 10;
  std::size_t p = 10;
  std::size_t n_train = 500;
  std::size_t n_cal = 500;
  std::size_t m = 100;
  std::uint64_t seed = 0;
};

inline constexpr double kStudentDof = 3.0;

void validate(const SimConfig& config);

Matrix gen_covariates(std::size_t n, std::size_t p, Rng& rng);

// Component k uses x_k, x_{k+1}, x_{k+2} with indices wrapped modulo p.
Vector regression_mu(int setting, const Eigen::Ref<const Vector>& x, std::size_t d);

// Noise scale matrix: 0.5 on the diagonal, 0.05 elsewhere.
Matrix noise_scale(std::size_t d);

Matrix gen_noise(int setting, std::size_t n, std::size_t d, Rng& rng);

struct SimDatasets {
  LabeledDataset train;
  LabeledDataset cal;
  LabeledDataset test;
};

LabeledDataset gen_block(const SimConfig& config, std::size_t n, Rng& rng);
SimDatasets gen_dataset(const SimConfig& config);

// Tabulated target regions for d in {2, 5, 10, 30}.
TargetRegion task_region(int task, std::size_t d);

}  // namespace mcs
