#include "mcs/score_learn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mcs/format.hpp"

namespace mcs {

InputFamily parse_input_family(std::string_view text) {
  if (text == "covariate_only" || text == "1") return InputFamily::CovariateOnly;
  if (text == "prediction_only" || text == "2") return InputFamily::PredictionOnly;
  if (text == "covariate_and_prediction" || text == "3") return InputFamily::CovariateAndPrediction;
  if (text == "full_with_y" || text == "4") return InputFamily::FullWithY;
  if (text == "all_inputs" || text == "5") return InputFamily::AllInputs;
  throw std::invalid_argument("unknown input family '" + std::string(text) + "'");
}

std::string to_string(InputFamily family) {
  switch (family) {
    case InputFamily::CovariateOnly:
      return "covariate_only";
    case InputFamily::PredictionOnly:
      return "prediction_only";
    case InputFamily::CovariateAndPrediction:
      return "covariate_and_prediction";
    case InputFamily::FullWithY:
      return "full_with_y";
    case InputFamily::AllInputs:
      return "all_inputs";
  }
  return "covariate_and_prediction";
}

namespace {

bool uses_covariates(InputFamily f) { return f != InputFamily::PredictionOnly; }
bool uses_prediction(InputFamily f) {
  return f == InputFamily::PredictionOnly || f == InputFamily::CovariateAndPrediction || f == InputFamily::AllInputs;
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (j) out << ' ';
    out << format_double(row[j]);
  }
  out << '\n';
}

void read_into(std::istream& in, double* data, Eigen::Index count) {
  for (Eigen::Index i = 0; i < count; ++i) {
    if (!(in >> data[i])) throw std::runtime_error("score model file truncated");
  }
}

std::vector<bool> interior_flags(const TargetRegion& region, const Matrix& y) {
  std::vector<bool> out(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) out[static_cast<std::size_t>(i)] = interior_contains(region, y.row(i).transpose());
  return out;
}

}  // namespace

bool uses_response(InputFamily family) {
  return family == InputFamily::FullWithY || family == InputFamily::AllInputs;
}

std::size_t input_width(InputFamily family, std::size_t feature_dim, std::size_t response_dim) {
  return (uses_covariates(family) ? feature_dim : 0) + (uses_prediction(family) ? response_dim : 0) +
         (uses_response(family) ? response_dim : 0);
}

Matrix assemble_inputs(InputFamily family, const Matrix& x, const Matrix& predictions, const Matrix& responses) {
  const Eigen::Index n = x.rows();
  if (uses_prediction(family) && predictions.rows() != n) throw DimensionMismatch("inputs: prediction rows mismatch");
  if (uses_response(family) && responses.rows() != n) throw DimensionMismatch("inputs: response rows mismatch");
  const auto width = static_cast<Eigen::Index>(
      input_width(family, static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(predictions.cols())));
  Matrix out(n, width);
  Eigen::Index col = 0;
  if (uses_covariates(family)) {
    out.middleCols(col, x.cols()) = x;
    col += x.cols();
  }
  if (uses_prediction(family)) {
    out.middleCols(col, predictions.cols()) = predictions;
    col += predictions.cols();
  }
  if (uses_response(family)) {
    if (responses.cols() != predictions.cols()) throw DimensionMismatch("inputs: response width mismatch");
    out.middleCols(col, responses.cols()) = responses;
  }
  return out;
}

// ---------------------------------------------------------------------------
// ScoreModel

ScoreModel::ScoreModel(InputFamily family, std::size_t input_dim, std::size_t hidden, double big_m)
    : w1(Matrix::Zero(static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(input_dim))),
      b1(Vector::Zero(static_cast<Eigen::Index>(hidden))),
      gamma(Vector::Ones(static_cast<Eigen::Index>(hidden))),
      beta(Vector::Zero(static_cast<Eigen::Index>(hidden))),
      running_mean(Vector::Zero(static_cast<Eigen::Index>(hidden))),
      running_var(Vector::Ones(static_cast<Eigen::Index>(hidden))),
      w2(Vector::Zero(static_cast<Eigen::Index>(hidden))),
      family_(family),
      big_m_(big_m) {
  if (hidden < 1 || input_dim < 1) throw std::invalid_argument("score model: hidden and input widths must be >= 1");
  if (!(big_m > 0.0) || !std::isfinite(big_m)) throw std::invalid_argument("score model: big_m must be positive");
}

ScoreModel ScoreModel::initialized(InputFamily family, std::size_t input_dim, std::size_t hidden, double big_m,
                                   Rng& rng) {
  ScoreModel model(family, input_dim, hidden, big_m);
  auto uniform = [&](double bound) { return bound * (2.0 * uniform_open_closed(rng) - 1.0); };
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index i = 0; i < model.w1.size(); ++i) model.w1.data()[i] = uniform(bound1);
  for (Eigen::Index i = 0; i < model.b1.size(); ++i) model.b1[i] = uniform(bound1);
  for (Eigen::Index i = 0; i < model.w2.size(); ++i) model.w2[i] = uniform(bound2);
  model.b2 = uniform(bound2);
  return model;
}

Vector ScoreModel::forward(const Matrix& inputs, bool training, MlpCache* cache) const {
  if (inputs.cols() != w1.cols()) throw DimensionMismatch("score model: input width mismatch");
  if (inputs.rows() < 1) throw std::invalid_argument("score model: empty batch");
  const auto n = static_cast<double>(inputs.rows());

  Matrix z = (inputs * w1.transpose()).rowwise() + b1.transpose();
  Vector mean, var;
  if (training) {
    mean = z.colwise().mean().transpose();
    var = ((z.rowwise() - mean.transpose()).array().square().colwise().sum() / n).transpose();
  } else {
    mean = running_mean;
    var = running_var;
  }
  const Vector inv_std = (var.array() + kBatchNormEps).rsqrt();
  Matrix z_hat = (z.rowwise() - mean.transpose()).array().rowwise() * inv_std.transpose().array();
  Matrix act = (z_hat.array().rowwise() * gamma.transpose().array()).rowwise() + beta.transpose().array();
  Matrix hidden = act.cwiseMax(0.0);
  Vector f = (hidden * w2).array() + b2;
  if (!f.allFinite()) throw std::runtime_error("score model produced a non-finite output");

  if (cache) {
    cache->inputs = inputs;
    cache->z_hat = std::move(z_hat);
    cache->act = std::move(act);
    cache->hidden = std::move(hidden);
    cache->inv_std = inv_std;
    cache->batch_mean = mean;
    cache->batch_var = var;
    cache->training = training;
  }
  return f;
}

MlpGradient ScoreModel::backward(const MlpCache& cache, const Vector& upstream) const {
  const Eigen::Index rows = cache.inputs.rows();
  if (upstream.size() != rows) throw DimensionMismatch("score model: upstream length mismatch");
  const auto n = static_cast<double>(rows);
  MlpGradient g;
  g.w2 = cache.hidden.transpose() * upstream;
  g.b2 = upstream.sum();
  Matrix d_act = (upstream * w2.transpose()).array() * (cache.act.array() > 0.0).cast<double>();
  g.gamma = (d_act.array() * cache.z_hat.array()).colwise().sum().transpose();
  g.beta = d_act.colwise().sum().transpose();
  Matrix d_zhat = d_act.array().rowwise() * gamma.transpose().array();
  Matrix d_z;
  if (cache.training) {
    const Eigen::RowVectorXd sum_d = d_zhat.colwise().sum();
    const Eigen::RowVectorXd sum_dz = (d_zhat.array() * cache.z_hat.array()).colwise().sum();
    Matrix centered = (d_zhat * n).rowwise() - sum_d;
    centered -= (cache.z_hat.array().rowwise() * sum_dz.array()).matrix();
    d_z = (centered.array().rowwise() * (cache.inv_std.transpose().array() / n));
  } else {
    d_z = d_zhat.array().rowwise() * cache.inv_std.transpose().array();
  }
  g.w1 = d_z.transpose() * cache.inputs;
  g.b1 = d_z.colwise().sum().transpose();
  return g;
}

void ScoreModel::update_running_stats(const MlpCache& cache) {
  if (!cache.training) return;
  const auto n = static_cast<double>(cache.inputs.rows());
  const Vector unbiased = n > 1 ? Vector(cache.batch_var * (n / (n - 1.0))) : cache.batch_var;
  running_mean = (1.0 - kRunningMomentum) * running_mean + kRunningMomentum * cache.batch_mean;
  running_var = (1.0 - kRunningMomentum) * running_var + kRunningMomentum * unbiased;
}

Vector ScoreModel::flat_parameters() const {
  Vector flat(w1.size() + b1.size() + gamma.size() + beta.size() + w2.size() + 1);
  flat << Eigen::Map<const Vector>(w1.data(), w1.size()), b1, gamma, beta, w2, b2;
  return flat;
}

void ScoreModel::set_flat_parameters(const Vector& flat) {
  if (flat.size() != w1.size() + b1.size() + gamma.size() + beta.size() + w2.size() + 1) {
    throw DimensionMismatch("score model: parameter vector length mismatch");
  }
  Eigen::Index at = 0;
  auto take = [&](Eigen::Index count) {
    auto seg = flat.segment(at, count);
    at += count;
    return seg;
  };
  Eigen::Map<Vector>(w1.data(), w1.size()) = take(w1.size());
  b1 = take(b1.size());
  gamma = take(gamma.size());
  beta = take(beta.size());
  w2 = take(w2.size());
  b2 = flat[at];
}

Vector ScoreModel::flatten(const MlpGradient& g) {
  Vector flat(g.w1.size() + g.b1.size() + g.gamma.size() + g.beta.size() + g.w2.size() + 1);
  flat << Eigen::Map<const Vector>(g.w1.data(), g.w1.size()), g.b1, g.gamma, g.beta, g.w2, g.b2;
  return flat;
}

void ScoreModel::save(std::ostream& out) const {
  out << "mcs-score-model 1 " << to_string(family_) << ' ' << w1.cols() << ' ' << w1.rows() << ' '
      << format_double(big_m_) << '\n';
  for (Eigen::Index i = 0; i < w1.rows(); ++i) write_row(out, w1.row(i));
  write_row(out, b1.transpose());
  write_row(out, gamma.transpose());
  write_row(out, beta.transpose());
  write_row(out, running_mean.transpose());
  write_row(out, running_var.transpose());
  write_row(out, w2.transpose());
  out << format_double(b2) << '\n';
}

ScoreModel ScoreModel::load(std::istream& in) {
  std::string magic, family;
  int version = 0;
  std::size_t input_dim = 0, hidden = 0;
  double big_m = 0.0;
  if (!(in >> magic >> version >> family >> input_dim >> hidden >> big_m) || magic != "mcs-score-model" ||
      version != 1) {
    throw std::runtime_error("unrecognized score model file");
  }
  ScoreModel model(parse_input_family(family), input_dim, hidden, big_m);
  Matrix w1_rows(model.w1.rows(), model.w1.cols());
  for (Eigen::Index i = 0; i < w1_rows.rows(); ++i) {
    Eigen::RowVectorXd row(w1_rows.cols());
    read_into(in, row.data(), row.size());
    w1_rows.row(i) = row;
  }
  model.w1 = w1_rows;
  read_into(in, model.b1.data(), model.b1.size());
  read_into(in, model.gamma.data(), model.gamma.size());
  read_into(in, model.beta.data(), model.beta.size());
  read_into(in, model.running_mean.data(), model.running_mean.size());
  read_into(in, model.running_var.data(), model.running_var.size());
  read_into(in, model.w2.data(), model.w2.size());
  read_into(in, &model.b2, 1);
  if ((model.running_var.array() < 0.0).any()) throw std::runtime_error("score model: negative running variance");
  return model;
}

// ---------------------------------------------------------------------------
// Learned score

LearnedScore::LearnedScore(ScoreModel model, TargetRegion region, std::shared_ptr<const Predictor> predictor)
    : model_(std::move(model)), region_(std::move(region)), predictor_(std::move(predictor)) {
  if (!predictor_) throw std::invalid_argument("LearnedScore: predictor is required");
}

std::vector<double> LearnedScore::score(const Matrix& x, const Matrix& y) const {
  return score_with_predictions(x, predictor_->predict(x), y);
}

std::vector<double> LearnedScore::score_with_predictions(const Matrix& x, const Matrix& predictions,
                                                         const Matrix& y) const {
  if (y.rows() != x.rows()) throw DimensionMismatch("LearnedScore: row count mismatch");
  const Vector f = model_.forward(assemble_inputs(model_.family(), x, predictions, y), false);
  std::vector<double> out(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = score_eval(region_, y.row(i).transpose(), f[i], model_.big_m());
  }
  return out;
}

double score_eval(const TargetRegion& region, const Eigen::Ref<const Vector>& y_or_r, double f_value, double big_m) {
  return (interior_contains(region, y_or_r) ? big_m : 0.0) - f_value;
}

// ---------------------------------------------------------------------------
// Smooth p-values and losses

SmoothPValues::SmoothPValues(std::span<const double> cal_scores, std::span<const double> test_scores,
                             double epsilon)
    : n_cal_(cal_scores.size()) {
  if (cal_scores.empty() || test_scores.empty()) throw std::invalid_argument("smooth p-values need n, m >= 1");
  std::vector<double> buf(cal_scores.begin(), cal_scores.end());
  buf.push_back(0.0);
  ranks_.reserve(test_scores.size());
  p_bar_.reserve(test_scores.size());
  const double denom = static_cast<double>(n_cal_ + 1);
  for (double t : test_scores) {
    buf.back() = t;
    ranks_.emplace_back(buf, epsilon);
    p_bar_.push_back(ranks_.back().ranks().back() / denom);
  }
}

void SmoothPValues::backward(std::span<const double> dp_bar, std::vector<double>& d_cal,
                             std::vector<double>& d_test) const {
  if (dp_bar.size() != p_bar_.size()) throw DimensionMismatch("smooth p-values: gradient length mismatch");
  d_cal.assign(n_cal_, 0.0);
  d_test.assign(p_bar_.size(), 0.0);
  const double denom = static_cast<double>(n_cal_ + 1);
  std::vector<double> upstream(n_cal_ + 1, 0.0);
  for (std::size_t j = 0; j < p_bar_.size(); ++j) {
    if (dp_bar[j] == 0.0) continue;
    upstream.back() = dp_bar[j] / denom;
    const std::vector<double> g = ranks_[j].vjp(upstream);
    for (std::size_t i = 0; i < n_cal_; ++i) d_cal[i] += g[i];
    d_test[j] += g.back();
  }
}

std::vector<double> smooth_p_values(const ScoreModel& model, const Predictor& predictor, const LabeledDataset& train1,
                                    const LabeledDataset& train2, const TargetRegion& region, double epsilon) {
  const Matrix r = boundary_responses(region, train2.size());
  Matrix x(train1.x.rows() + train2.x.rows(), train1.x.cols());
  x << train1.x, train2.x;
  Matrix y(x.rows(), train1.y.cols());
  y << train1.y, r;
  const Vector f = model.forward(assemble_inputs(model.family(), x, predictor.predict(x), y), true);
  std::vector<double> cal(train1.size()), test(train2.size());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    cal[i] = score_eval(region, train1.y.row(static_cast<Eigen::Index>(i)).transpose(), f[static_cast<Eigen::Index>(i)],
                        model.big_m());
  }
  for (std::size_t j = 0; j < test.size(); ++j) {
    test[j] = -f[static_cast<Eigen::Index>(cal.size() + j)];
  }
  return SmoothPValues(cal, test, epsilon).p_bar();
}

double loss_smooth_selection(std::span<const double> p_bar, double q, double tau, double epsilon,
                             std::vector<double>* grad) {
  if (p_bar.empty()) throw std::invalid_argument("loss L1: empty p-values");
  if (!(tau > 0.0)) throw std::invalid_argument("loss L1: tau must be positive");
  const std::size_t m = p_bar.size();
  const double md = static_cast<double>(m);
  SoftRank rank(p_bar, epsilon);
  const std::vector<double>& a = rank.ranks();
  std::vector<double> s(m), e(m);
  for (std::size_t j = 0; j < m; ++j) {
    s[j] = sigmoid((q * a[j] / md - p_bar[j]) / tau);
    e[j] = a[j] * s[j];
  }
  const double e_max = *std::max_element(e.begin(), e.end());
  double z = 0.0;
  for (double v : e) z += std::exp(v - e_max);
  const double lse = e_max + std::log(z);

  if (grad) {
    std::vector<double> d_a(m), d_p(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double weight = -std::exp(e[j] - lse);  // dL/de_j
      const double ds = s[j] * (1.0 - s[j]) / tau;
      d_a[j] = weight * (s[j] + a[j] * ds * q / md);
      d_p[j] = weight * a[j] * ds * -1.0;
    }
    const std::vector<double> via_rank = rank.vjp(d_a);
    grad->resize(m);
    for (std::size_t j = 0; j < m; ++j) (*grad)[j] = d_p[j] + via_rank[j];
  }
  return -lse;
}

double loss_p_penalty(std::span<const double> p_bar, const std::vector<bool>& in_region, double gamma,
                      std::vector<double>* grad) {
  if (p_bar.size() != in_region.size()) throw DimensionMismatch("loss L2: label count mismatch");
  double loss = 0.0;
  if (grad) grad->resize(p_bar.size());
  for (std::size_t j = 0; j < p_bar.size(); ++j) {
    const double w = in_region[j] ? 1.0 : -gamma;
    loss += p_bar[j] * w;
    if (grad) (*grad)[j] = w;
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Training

int select_best_epoch(const std::vector<double>& validation_powers) {
  if (validation_powers.empty()) throw std::invalid_argument("no epochs to select from");
  std::size_t best = 0;
  for (std::size_t t = 1; t < validation_powers.size(); ++t) {
    if (validation_powers[t] > validation_powers[best]) best = t;
  }
  return static_cast<int>(best) + 1;
}

double training_loss(const ScoreModel& model, const Matrix& inputs, std::size_t n_cal,
                     const std::vector<bool>& cal_interior, const std::vector<bool>& test_in_region,
                     const TrainConfig& config, MlpGradient* grad, MlpCache* cache) {
  const std::size_t m = test_in_region.size();
  if (static_cast<std::size_t>(inputs.rows()) != n_cal + m || cal_interior.size() != n_cal) {
    throw DimensionMismatch("training_loss: batch layout mismatch");
  }
  MlpCache local;
  MlpCache& c = cache ? *cache : local;
  const Vector f = model.forward(inputs, true, &c);

  std::vector<double> cal(n_cal), test(m);
  for (std::size_t i = 0; i < n_cal; ++i) cal[i] = (cal_interior[i] ? model.big_m() : 0.0) - f[static_cast<Eigen::Index>(i)];
  for (std::size_t j = 0; j < m; ++j) test[j] = -f[static_cast<Eigen::Index>(n_cal + j)];

  const SmoothPValues smooth(cal, test, config.epsilon);
  std::vector<double> dp;
  const double loss = config.loss == LossKind::L2
                          ? loss_p_penalty(smooth.p_bar(), test_in_region, config.gamma, &dp)
                          : loss_smooth_selection(smooth.p_bar(), config.q, config.tau, config.epsilon, &dp);
  if (grad) {
    std::vector<double> d_cal, d_test;
    smooth.backward(dp, d_cal, d_test);
    Vector df(inputs.rows());
    // Scores are (indicator - f), so dL/df = -dL/dV.
    for (std::size_t i = 0; i < n_cal; ++i) df[static_cast<Eigen::Index>(i)] = -d_cal[i];
    for (std::size_t j = 0; j < m; ++j) df[static_cast<Eigen::Index>(n_cal + j)] = -d_test[j];
    *grad = model.backward(c, df);
  }
  return loss;
}

void check_big_m(const ScoreModel& model, const Matrix& inputs) {
  if (!uses_response(model.family()) || inputs.rows() == 0) return;
  const double max_abs = model.forward(inputs, false).cwiseAbs().maxCoeff();
  if (!(model.big_m() > 2.0 * max_abs)) {
    std::ostringstream msg;
    msg << "big_m = " << model.big_m() << " does not exceed 2 max|f| = " << 2.0 * max_abs
        << "; the learned score is not regionally monotone";
    throw std::runtime_error(msg.str());
  }
}

TrainResult train_score(const LabeledDataset& f_train, const LabeledDataset& f_val, const TargetRegion& region,
                        const Predictor& predictor, const TrainConfig& config) {
  if (config.epochs < 1 || config.validation_partitions < 1 || !(config.tau > 0.0) || !(config.gamma >= 0.0) ||
      !(config.q > 0.0 && config.q < 1.0) || !(config.epsilon > 0.0) || config.hidden < 1) {
    throw std::invalid_argument("train_score: invalid training configuration");
  }
  if (f_train.size() < 2 || f_val.size() < 2) throw std::invalid_argument("train_score: need >= 2 rows per split");
  if (f_train.response_dim() != region.dimension() || f_val.response_dim() != region.dimension()) {
    throw DimensionMismatch("train_score: responses do not match region dimension");
  }

  Rng rng = stream_for(config.seed, 0x5C0);
  const auto p = f_train.feature_dim();
  const auto d = f_train.response_dim();
  ScoreModel model = ScoreModel::initialized(config.family, input_width(config.family, p, d), config.hidden,
                                             config.big_m, rng);

  const Matrix train_pred = predictor.predict(f_train.x);
  const Matrix val_pred = predictor.predict(f_val.x);
  const std::vector<bool> train_interior = interior_flags(region, f_train.y);
  const std::vector<bool> train_member = membership(region, f_train.y);
  const std::vector<bool> val_interior = interior_flags(region, f_val.y);
  const std::vector<bool> val_member = membership(region, f_val.y);
  const Vector r = boundary_point(region);

  const std::size_t n_train = f_train.size();
  const std::size_t n_cal = n_train / 2;
  const std::size_t n_val = f_val.size();
  const std::size_t n_val_cal = n_val / 2;

  Vector velocity = Vector::Zero(model.flat_parameters().size());
  std::vector<ScoreModel> snapshots;
  std::vector<double> powers;
  TrainResult result{model, {}, 0};
  snapshots.reserve(static_cast<std::size_t>(config.epochs));

  const Matrix val_inputs_y = assemble_inputs(model.family(), f_val.x, val_pred, f_val.y);
  const Matrix val_inputs_r =
      assemble_inputs(model.family(), f_val.x, val_pred, r.transpose().replicate(f_val.x.rows(), 1));

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // Training step on a fresh train1/train2 partition.
    const std::vector<std::size_t> perm = random_permutation(n_train, rng);
    Matrix x(static_cast<Eigen::Index>(n_train), f_train.x.cols());
    Matrix pred(static_cast<Eigen::Index>(n_train), train_pred.cols());
    Matrix y(static_cast<Eigen::Index>(n_train), f_train.y.cols());
    std::vector<bool> cal_interior(n_cal);
    std::vector<bool> test_member(n_train - n_cal);
    for (std::size_t k = 0; k < n_train; ++k) {
      const auto src = static_cast<Eigen::Index>(perm[k]);
      const auto dst = static_cast<Eigen::Index>(k);
      x.row(dst) = f_train.x.row(src);
      pred.row(dst) = train_pred.row(src);
      if (k < n_cal) {
        y.row(dst) = f_train.y.row(src);
        cal_interior[k] = train_interior[perm[k]];
      } else {
        y.row(dst) = r.transpose();
        test_member[k - n_cal] = train_member[perm[k]];
      }
    }
    const Matrix inputs = assemble_inputs(model.family(), x, pred, y);
    MlpGradient grad;
    MlpCache cache;
    const double loss = training_loss(model, inputs, n_cal, cal_interior, test_member, config, &grad, &cache);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_score: loss diverged at epoch " + std::to_string(epoch));
    }
    const Vector g = ScoreModel::flatten(grad);
    if (!g.allFinite()) throw std::runtime_error("train_score: non-finite gradient at epoch " + std::to_string(epoch));
    velocity = config.momentum * velocity + g;
    model.set_flat_parameters(model.flat_parameters() - config.lr * velocity);
    model.update_running_stats(cache);

    // Validation: BH selections on random halves of f_val with the current model.
    const Vector f_y = model.forward(val_inputs_y, false);
    const Vector f_r = model.forward(val_inputs_r, false);
    double power_sum = 0.0;
    for (int k = 0; k < config.validation_partitions; ++k) {
      const std::vector<std::size_t> vp = random_permutation(n_val, rng);
      std::vector<double> cal_scores(n_val_cal), test_scores(n_val - n_val_cal);
      std::vector<bool> truth(n_val - n_val_cal);
      for (std::size_t i = 0; i < n_val_cal; ++i) {
        const std::size_t row = vp[i];
        cal_scores[i] = (val_interior[row] ? model.big_m() : 0.0) - f_y[static_cast<Eigen::Index>(row)];
      }
      for (std::size_t j = 0; j < test_scores.size(); ++j) {
        const std::size_t row = vp[n_val_cal + j];
        test_scores[j] = -f_r[static_cast<Eigen::Index>(row)];
        truth[j] = val_member[row];
      }
      const SelectionResult sel = bh_select(conformal_p_values(cal_scores, test_scores, rng), config.q);
      power_sum += fdp_and_power(sel.selected, truth).power;
    }
    const double power = power_sum / static_cast<double>(config.validation_partitions);
    powers.push_back(power);
    snapshots.push_back(model);
    result.log.push_back({epoch, loss, power});
  }

  result.best_epoch = select_best_epoch(powers);
  result.model = snapshots[static_cast<std::size_t>(result.best_epoch - 1)];

  if (uses_response(result.model.family())) {
    check_big_m(result.model, assemble_inputs(result.model.family(), f_train.x, train_pred, f_train.y));
    check_big_m(result.model, val_inputs_y);
    check_big_m(result.model, val_inputs_r);
  }
  return result;
}

}  // namespace mcs
