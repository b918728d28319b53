#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mcs/conformal.hpp"
#include "mcs/predictors.hpp"
#include "mcs/regions.hpp"
#include "mcs/softsort.hpp"

namespace mcs {

// Which of x, mu_hat(x), y are fed to f_theta (concatenated in that order).
enum class InputFamily { CovariateOnly, PredictionOnly, CovariateAndPrediction, FullWithY, AllInputs };

InputFamily parse_input_family(std::string_view text);
std::string to_string(InputFamily family);
bool uses_response(InputFamily family);
std::size_t input_width(InputFamily family, std::size_t feature_dim, std::size_t response_dim);

/// Rows of [x | mu | y] per the family. `responses` may be boundary points for test rows.
Matrix assemble_inputs(InputFamily family, const Matrix& x, const Matrix& predictions, const Matrix& responses);

/// Gradients with the same layout as ScoreModel's trainable parameters.
struct MlpGradient {
  Matrix w1;
  Vector b1;
  Vector gamma;
  Vector beta;
  Vector w2;
  double b2 = 0.0;
};

/// Intermediate values of a batch forward pass, kept for the backward pass.
struct MlpCache {
  Matrix inputs;
  Matrix z_hat;   // normalized pre-activations
  Matrix act;     // post-batchnorm, pre-rectifier
  Matrix hidden;  // rectifier output
  Vector inv_std;
  Vector batch_mean;
  Vector batch_var;  // biased
  bool training = false;
};

/// f_theta: affine -> batch normalization -> rectifier -> affine -> scalar.
class ScoreModel {
 public:
  static constexpr double kBatchNormEps = 1e-5;
  static constexpr double kRunningMomentum = 0.1;

  ScoreModel(InputFamily family, std::size_t input_dim, std::size_t hidden, double big_m);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, unit scale, zero shift.
  static ScoreModel initialized(InputFamily family, std::size_t input_dim, std::size_t hidden, double big_m,
                                Rng& rng);

  /// Batch forward. Training mode normalizes with batch statistics, eval mode with running ones.
  Vector forward(const Matrix& inputs, bool training, MlpCache* cache = nullptr) const;
  MlpGradient backward(const MlpCache& cache, const Vector& upstream) const;
  void update_running_stats(const MlpCache& cache);

  Vector flat_parameters() const;
  void set_flat_parameters(const Vector& flat);
  static Vector flatten(const MlpGradient& g);

  InputFamily family() const { return family_; }
  std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1.rows()); }
  double big_m() const { return big_m_; }

  void save(std::ostream& out) const;
  static ScoreModel load(std::istream& in);

  // Trainable parameters and batch-normalization running statistics.
  Matrix w1;  // hidden x input
  Vector b1;
  Vector gamma;
  Vector beta;
  Vector running_mean;
  Vector running_var;
  Vector w2;  // hidden
  double b2 = 0.0;

 private:
  InputFamily family_;
  double big_m_;
};

/// V(x, y) = M * 1{y in interior of R} - f_theta(inputs).
class LearnedScore final : public NonconformityScore {
 public:
  LearnedScore(ScoreModel model, TargetRegion region, std::shared_ptr<const Predictor> predictor);

  std::vector<double> score(const Matrix& x, const Matrix& y) const override;
  std::vector<double> score_with_predictions(const Matrix& x, const Matrix& predictions, const Matrix& y) const;

  const ScoreModel& model() const { return model_; }

 private:
  ScoreModel model_;
  TargetRegion region_;
  std::shared_ptr<const Predictor> predictor_;
};

/// Single-sample form: big_m * 1{y_or_r in interior} - f_value.
double score_eval(const TargetRegion& region, const Eigen::Ref<const Vector>& y_or_r, double f_value, double big_m);

/// Smooth conformal p-values from calibration and test scores:
///   p_bar_j = soft_rank([cal..., test_j])[last] / (n + 1).
class SmoothPValues {
 public:
  SmoothPValues(std::span<const double> cal_scores, std::span<const double> test_scores, double epsilon);

  const std::vector<double>& p_bar() const { return p_bar_; }
  /// Pulls dL/dp_bar back to (dL/dcal_scores, dL/dtest_scores).
  void backward(std::span<const double> dp_bar, std::vector<double>& d_cal, std::vector<double>& d_test) const;

 private:
  std::vector<SoftRank> ranks_;
  std::vector<double> p_bar_;
  std::size_t n_cal_;
};

/// Smooth p-values of train2 against train1 under the model in training mode (one batch).
std::vector<double> smooth_p_values(const ScoreModel& model, const Predictor& predictor, const LabeledDataset& train1,
                                    const LabeledDataset& train2, const TargetRegion& region, double epsilon);

// L1 = -log sum_j exp(a_j s_j), a = soft_rank(p_bar), s_j = sigmoid((q a_j / m - p_bar_j) / tau).
double loss_smooth_selection(std::span<const double> p_bar, double q, double tau, double epsilon,
                             std::vector<double>* grad = nullptr);

// L2 = sum_j p_bar_j (1{y_j in R} - gamma 1{y_j not in R}).
double loss_p_penalty(std::span<const double> p_bar, const std::vector<bool>& in_region, double gamma,
                      std::vector<double>* grad = nullptr);

enum class LossKind { L1, L2 };

struct TrainConfig {
  int epochs = 200;
  double lr = 1e-2;
  double momentum = 0.9;
  double tau = 0.01;
  double gamma = 0.5;
  LossKind loss = LossKind::L2;
  int validation_partitions = 100;
  double q = 0.3;
  double epsilon = 0.1;
  std::size_t hidden = 64;
  InputFamily family = InputFamily::CovariateAndPrediction;
  double big_m = 1e6;
  std::uint64_t seed = 0;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  double validation_power = 0.0;
};

struct TrainResult {
  ScoreModel model;
  std::vector<EpochLog> log;
  int best_epoch = 0;  // 1-based
};

/// First epoch attaining the maximum (earliest on ties). Returns 1-based epoch.
int select_best_epoch(const std::vector<double>& validation_powers);

/// Loss and parameter gradient for one training step on a fixed train1/train2 split.
double training_loss(const ScoreModel& model, const Matrix& inputs, std::size_t n_cal, const std::vector<bool>& cal_interior,
                     const std::vector<bool>& test_in_region, const TrainConfig& config, MlpGradient* grad,
                     MlpCache* cache = nullptr);

/// Train f_theta on f_train with epoch selection on f_val.
TrainResult train_score(const LabeledDataset& f_train, const LabeledDataset& f_val, const TargetRegion& region,
                        const Predictor& predictor, const TrainConfig& config);

/// For families that read y: M > 2 max |f_theta| over the given rows (eval mode).
void check_big_m(const ScoreModel& model, const Matrix& inputs);

}  // namespace mcs
