#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "mcs/types.hpp"

namespace mcs {

/// Point predictor of the response vector, mu_hat(x).
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Matrix predict(const Matrix& x) const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual std::size_t response_dim() const = 0;
  virtual void save(std::ostream& out) const = 0;
};

class RidgeModel final : public Predictor {
 public:
  RidgeModel(Matrix weights, double ridge_lambda);

  Matrix predict(const Matrix& x) const override;
  std::size_t feature_dim() const override { return static_cast<std::size_t>(weights_.rows() - 1); }
  std::size_t response_dim() const override { return static_cast<std::size_t>(weights_.cols()); }
  void save(std::ostream& out) const override;

  // (p+1) x d, first row is the intercept.
  const Matrix& weights() const { return weights_; }
  double ridge_lambda() const { return lambda_; }

 private:
  Matrix weights_;
  double lambda_;
};

/// Minimizes ||Y - [1 X] W||_F^2 + lambda ||W_slopes||_F^2. With lambda = 0 the
/// minimum-norm least-squares solution is returned, so rank-deficient designs are accepted.
RidgeModel fit_ridge(const Matrix& x, const Matrix& y, double ridge_lambda);

class KnnModel final : public Predictor {
 public:
  KnnModel(Matrix x, Matrix y, std::size_t k);

  Matrix predict(const Matrix& x) const override;
  std::size_t feature_dim() const override { return static_cast<std::size_t>(x_.cols()); }
  std::size_t response_dim() const override { return static_cast<std::size_t>(y_.cols()); }
  void save(std::ostream& out) const override;

  std::size_t k() const { return k_; }

 private:
  Matrix x_;
  Matrix y_;
  std::size_t k_;
};

/// Average response of the k nearest training rows (Euclidean; ties broken by row index).
KnnModel fit_knn(const Matrix& x, const Matrix& y, std::size_t k);

class LogisticModel {
 public:
  explicit LogisticModel(Vector weights);

  /// P(label = true | x), in (0, 1).
  Vector predict_prob(const Matrix& x) const;
  std::size_t feature_dim() const { return static_cast<std::size_t>(weights_.size() - 1); }
  void save(std::ostream& out) const;

  // Intercept first.
  const Vector& weights() const { return weights_; }

 private:
  Vector weights_;
};

struct LogisticConfig {
  int steps = 500;
  double lr = 0.1;
};

/// Mean log-loss of weights (intercept first) and its gradient.
double logistic_loss(const Vector& weights, const Matrix& x, const std::vector<bool>& labels, Vector* gradient);

/// Full-batch gradient descent from zero weights, no regularization.
LogisticModel fit_logistic(const Matrix& x, const std::vector<bool>& labels, const LogisticConfig& config = {});

std::unique_ptr<Predictor> load_predictor(std::istream& in);
LogisticModel load_logistic(std::istream& in);

}  // namespace mcs
