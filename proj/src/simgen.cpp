#include "mcs/simgen.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace mcs {

void validate(const SimConfig& c) {
  if (c.setting < 1 || c.setting > 6) throw std::invalid_argument("setting must be in 1..6");
  if (c.task < 1 || c.task > 4) throw std::invalid_argument("task must be in 1..4");
  if (c.d < 2) throw std::invalid_argument("response dimension d must be >= 2");
  if (c.p < 1) throw std::invalid_argument("covariate dimension p must be >= 1");
  if (c.n_train < 1 || c.n_cal < 1 || c.m < 1) throw std::invalid_argument("block sizes must be >= 1");
}

Matrix gen_covariates(std::size_t n, std::size_t p, Rng& rng) {
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  // Row-major fill so the draw order does not depend on storage order.
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      double u = 0.0;
      do {
        u = 2.0 * uniform_open_closed(rng) - 1.0;
      } while (u >= 1.0);  // open interval (-1, 1)
      x(i, j) = u;
    }
  }
  return x;
}

Vector regression_mu(int setting, const Eigen::Ref<const Vector>& x, std::size_t d) {
  if (setting < 1 || setting > 6) throw std::invalid_argument("setting must be in 1..6");
  const auto p = static_cast<std::size_t>(x.size());
  if (p == 0) throw std::invalid_argument("regression_mu: empty covariates");
  auto at = [&](std::size_t idx) { return x[static_cast<Eigen::Index>(idx % p)]; };
  const int shape = (setting - 1) % 3;
  Vector mu(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) {
    const double a = at(k), b = at(k + 1), c = at(k + 2);
    double v = 0.0;
    switch (shape) {
      case 0:
        v = a - 0.5 * b + c + 1.5;
        break;
      case 1:
        v = a + c * c + 0.5;
        break;
      default: {
        const double first = (a * b > 0.0 && c > 0.5) ? 0.25 + c : 0.0;
        const double second = (a * b <= 0.0 && c <= 0.5) ? c - 0.25 : 0.0;
        v = first + second + 0.75;
      }
    }
    mu[static_cast<Eigen::Index>(k)] = v;
  }
  return mu;
}

Matrix noise_scale(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix sigma = Matrix::Constant(n, n, 0.05);
  sigma.diagonal().setConstant(0.5);
  return sigma;
}

namespace {

const Matrix& cholesky_factor(std::size_t d) {
  static std::mutex mutex;
  static std::map<std::size_t, Matrix> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(d);
  if (it == cache.end()) {
    Eigen::LLT<Matrix> llt(noise_scale(d));
    it = cache.emplace(d, Matrix(llt.matrixL())).first;
  }
  return it->second;
}

}  // namespace

Matrix gen_noise(int setting, std::size_t n, std::size_t d, Rng& rng) {
  if (setting < 1 || setting > 6) throw std::invalid_argument("setting must be in 1..6");
  const Matrix& chol = cholesky_factor(d);
  const bool heavy = setting >= 4;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(kStudentDof);
  Matrix eps(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Vector z(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < eps.rows(); ++i) {
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(rng);
    Vector row = chol * z;
    if (heavy) row *= std::sqrt(kStudentDof / chi2(rng));
    eps.row(i) = row.transpose();
  }
  return eps;
}

LabeledDataset gen_block(const SimConfig& config, std::size_t n, Rng& rng) {
  LabeledDataset block;
  block.x = gen_covariates(n, config.p, rng);
  block.y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(config.d));
  for (Eigen::Index i = 0; i < block.x.rows(); ++i) {
    block.y.row(i) = regression_mu(config.setting, block.x.row(i).transpose(), config.d).transpose();
  }
  block.y += gen_noise(config.setting, n, config.d, rng);
  return block;
}

SimDatasets gen_dataset(const SimConfig& config) {
  validate(config);
  Rng train_rng = stream_for(config.seed, 1);
  Rng cal_rng = stream_for(config.seed, 2);
  Rng test_rng = stream_for(config.seed, 3);
  return SimDatasets{gen_block(config, config.n_train, train_rng), gen_block(config, config.n_cal, cal_rng),
                     gen_block(config, config.m, test_rng)};
}

TargetRegion task_region(int task, std::size_t d) {
  struct Row {
    std::size_t d;
    double orthant_cut, ball_radius, complement_cut, complement_radius;
  };
  static constexpr Row kTable[] = {
      {2, 1.0, 1.5, -0.5, 3.0},
      {5, 0.2, 2.6, -0.8, 4.0},
      {10, -0.2, 4.1, -1.1, 5.5},
      {30, -0.6, 7.5, -1.6, 9.5},
  };
  const Row* row = nullptr;
  for (const Row& r : kTable) {
    if (r.d == d) row = &r;
  }
  if (!row) {
    throw std::invalid_argument("no tabulated coefficients for d = " + std::to_string(d) +
                                " (supported: 2, 5, 10, 30); pass an explicit region");
  }
  const auto n = static_cast<Eigen::Index>(d);
  const Vector center = Vector::Constant(n, 2.0);
  switch (task) {
    case 1:
      return TargetRegion::orthant(Vector::Constant(n, row->orthant_cut));
    case 2:
      return TargetRegion::ball(center, row->ball_radius);
    case 3:
      return TargetRegion::orthant_complement(Vector::Constant(n, row->complement_cut));
    case 4:
      return TargetRegion::ball_complement(center, row->complement_radius);
    default:
      throw std::invalid_argument("task must be in 1..4");
  }
}

}  // namespace mcs
