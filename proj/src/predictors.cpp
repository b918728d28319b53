#include "mcs/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mcs/format.hpp"

namespace mcs {

namespace {

Matrix with_intercept(const Matrix& x) {
  Matrix a(x.rows(), x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  return a;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + " must be finite");
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) throw std::runtime_error("model file truncated");
    }
  }
  return m;
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

RidgeModel::RidgeModel(Matrix weights, double ridge_lambda) : weights_(std::move(weights)), lambda_(ridge_lambda) {
  if (weights_.rows() < 1 || weights_.cols() < 1) throw std::invalid_argument("ridge weights must be nonempty");
  require_finite(weights_, "ridge weights");
}

Matrix RidgeModel::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != feature_dim()) {
    throw DimensionMismatch("ridge: expected " + std::to_string(feature_dim()) + " features");
  }
  return (x * weights_.bottomRows(weights_.rows() - 1)).rowwise() + weights_.row(0);
}

void RidgeModel::save(std::ostream& out) const {
  out << "mcs-ridge 1 " << weights_.rows() << ' ' << weights_.cols() << ' ' << format_double(lambda_) << '\n';
  write_matrix(out, weights_);
}

RidgeModel fit_ridge(const Matrix& x, const Matrix& y, double ridge_lambda) {
  if (x.rows() < 1) throw std::invalid_argument("fit_ridge: need at least one row");
  if (x.rows() != y.rows()) throw DimensionMismatch("fit_ridge: X and Y row counts differ");
  if (y.cols() < 1) throw std::invalid_argument("fit_ridge: response dimension must be >= 1");
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda)) throw std::invalid_argument("ridge lambda must be >= 0");
  require_finite(x, "X");
  require_finite(y, "Y");

  const Matrix a = with_intercept(x);
  Matrix w;
  if (ridge_lambda == 0.0) {
    w = a.completeOrthogonalDecomposition().solve(y);
  } else {
    Matrix gram = a.transpose() * a;
    gram.diagonal().tail(x.cols()).array() += ridge_lambda;
    w = gram.ldlt().solve(a.transpose() * y);
  }
  if (!w.allFinite()) throw std::runtime_error("fit_ridge: solution is not finite");
  return RidgeModel(std::move(w), ridge_lambda);
}

KnnModel::KnnModel(Matrix x, Matrix y, std::size_t k) : x_(std::move(x)), y_(std::move(y)), k_(k) {
  if (x_.rows() != y_.rows()) throw DimensionMismatch("knn: X and Y row counts differ");
  if (k_ < 1 || k_ > static_cast<std::size_t>(x_.rows())) throw std::invalid_argument("knn: k must be in [1, n]");
}

Matrix KnnModel::predict(const Matrix& x) const {
  if (x.cols() != x_.cols()) throw DimensionMismatch("knn: feature width mismatch");
  const auto n = static_cast<std::size_t>(x_.rows());
  Matrix out(x.rows(), y_.cols());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = {(x_.row(static_cast<Eigen::Index>(i)) - x.row(r)).squaredNorm(), i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(y_.cols());
    for (std::size_t i = 0; i < k_; ++i) acc += y_.row(static_cast<Eigen::Index>(dist[i].second));
    out.row(r) = acc / static_cast<double>(k_);
  }
  return out;
}

void KnnModel::save(std::ostream& out) const {
  out << "mcs-knn 1 " << x_.rows() << ' ' << x_.cols() << ' ' << y_.cols() << ' ' << k_ << '\n';
  write_matrix(out, x_);
  write_matrix(out, y_);
}

KnnModel fit_knn(const Matrix& x, const Matrix& y, std::size_t k) {
  require_finite(x, "X");
  require_finite(y, "Y");
  return KnnModel(x, y, k);
}

LogisticModel::LogisticModel(Vector weights) : weights_(std::move(weights)) {
  if (weights_.size() < 1) throw std::invalid_argument("logistic weights must be nonempty");
  if (!weights_.allFinite()) throw std::invalid_argument("logistic weights must be finite");
}

Vector LogisticModel::predict_prob(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != feature_dim()) throw DimensionMismatch("logistic: feature width mismatch");
  const Vector logits = (x * weights_.tail(weights_.size() - 1)).array() + weights_[0];
  return logits.unaryExpr([](double t) { return sigmoid(t); });
}

void LogisticModel::save(std::ostream& out) const {
  out << "mcs-logistic 1 " << weights_.size() << '\n';
  write_matrix(out, weights_.transpose());
}

double logistic_loss(const Vector& weights, const Matrix& x, const std::vector<bool>& labels, Vector* gradient) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw DimensionMismatch("logistic: label count mismatch");
  if (weights.size() != x.cols() + 1) throw DimensionMismatch("logistic: weight length mismatch");
  const auto n = static_cast<double>(std::max<Eigen::Index>(x.rows(), 1));
  const Vector logits = (x * weights.tail(x.cols())).array() + weights[0];
  double loss = 0.0;
  Vector residual(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double t = logits[i];
    const double yi = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    // log(1 + e^t) - y t, stable for large |t|
    loss += std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))) - yi * t;
    residual[i] = sigmoid(t) - yi;
  }
  if (gradient) {
    gradient->resize(weights.size());
    (*gradient)[0] = residual.sum() / n;
    gradient->tail(x.cols()) = x.transpose() * residual / n;
  }
  return loss / n;
}

LogisticModel fit_logistic(const Matrix& x, const std::vector<bool>& labels, const LogisticConfig& config) {
  if (x.rows() < 1) throw std::invalid_argument("fit_logistic: need at least one row");
  if (config.steps < 0 || !(config.lr > 0.0)) throw std::invalid_argument("fit_logistic: bad config");
  require_finite(x, "X");
  Vector w = Vector::Zero(x.cols() + 1);
  Vector grad;
  for (int step = 0; step < config.steps; ++step) {
    logistic_loss(w, x, labels, &grad);
    w -= config.lr * grad;
  }
  return LogisticModel(std::move(w));
}

std::unique_ptr<Predictor> load_predictor(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || version != 1) throw std::runtime_error("unrecognized predictor file");
  if (magic == "mcs-ridge") {
    Eigen::Index rows = 0, cols = 0;
    double lambda = 0.0;
    if (!(in >> rows >> cols >> lambda) || rows < 1 || cols < 1) throw std::runtime_error("bad ridge header");
    return std::make_unique<RidgeModel>(read_matrix(in, rows, cols), lambda);
  }
  if (magic == "mcs-knn") {
    Eigen::Index n = 0, p = 0, d = 0;
    std::size_t k = 0;
    if (!(in >> n >> p >> d >> k) || n < 1 || p < 0 || d < 1) throw std::runtime_error("bad knn header");
    Matrix x = read_matrix(in, n, p);
    Matrix y = read_matrix(in, n, d);
    return std::make_unique<KnnModel>(std::move(x), std::move(y), k);
  }
  throw std::runtime_error("unknown predictor kind '" + magic + "'");
}

LogisticModel load_logistic(std::istream& in) {
  std::string magic;
  int version = 0;
  Eigen::Index len = 0;
  if (!(in >> magic >> version >> len) || magic != "mcs-logistic" || version != 1 || len < 1) {
    throw std::runtime_error("unrecognized logistic model file");
  }
  Vector w = read_matrix(in, 1, len).transpose();
  return LogisticModel(std::move(w));
}

}  // namespace mcs
