#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mcs/baselines.hpp"
#include "mcs/score_learn.hpp"
#include "mcs/scores_dist.hpp"
#include "mcs/simgen.hpp"

namespace mcs {

enum class Method { McsDistRegular, McsDistClipped, McsLearn, CsInt, CsIb, CsIs, Bi, Oracle };

/// Accepts mcs_dist (clipped), mcs_dist_clipped, mcs_dist_regular, mcs_learn, cs_int, cs_ib, cs_is, bi, oracle.
Method parse_method(std::string_view text);
std::string to_string(Method method);

enum class PredictorKind { Ridge, Knn };

struct MethodOptions {
  PredictorKind predictor = PredictorKind::Ridge;
  double ridge_lambda = 1e-3;
  std::size_t knn_k = 10;
  double big_m = 1e6;
  Norm norm = Norm::L2;
  TrainConfig learn;
  CsIsSpec cs_is;
  BiConfig bi;
};

std::shared_ptr<const Predictor> fit_predictor(const LabeledDataset& train, const MethodOptions& options);

struct MethodOutput {
  IndexSet selected;
  std::vector<double> p_values;  // for intersections: the largest per-dimension p-value
  std::size_t k_star = 0;
  double threshold = 0.0;
};

/// Runs any non-oracle method on calibration/test data. mcs_learn splits `cal` 8:1:1 into
/// f-train / f-val / cal' and trains its score first.
MethodOutput run_method(Method method, const LabeledDataset& cal, const UnlabeledDataset& test,
                        const TargetRegion& region, std::shared_ptr<const Predictor> predictor, double q, Rng& rng,
                        const MethodOptions& options);

struct CalibrationSplit {
  LabeledDataset f_train;
  LabeledDataset f_val;
  LabeledDataset cal;
};

/// Random 8:1:1 split; f_val and cal get floor(n/10) rows each, f_train the rest.
CalibrationSplit split_calibration(const LabeledDataset& cal, Rng& rng);

struct TrialResult {
  Method method = Method::McsDistClipped;
  double fdp = 0.0;
  double power = 0.0;
  std::size_t n_selected = 0;
  std::uint64_t seed = 0;
};

/// One simulated dataset (from config.seed), one predictor fit, then every method on it.
std::vector<TrialResult> run_paired_trial(const SimConfig& config, const std::vector<Method>& methods, double q,
                                          const MethodOptions& options = {});
TrialResult run_trial(const SimConfig& config, Method method, double q, const MethodOptions& options = {});

struct BenchmarkRow {
  Method method = Method::McsDistClipped;
  double q = 0.0;
  double mean_fdr = 0.0;
  double se_fdr = 0.0;
  double mean_power = 0.0;
  double se_power = 0.0;
  std::size_t reps = 0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and sample-SD / sqrt(n); SE is 0 for a single value.
MeanSe mean_and_se(const std::vector<double>& values);

/// reps trials with seeds config.seed + r, paired across methods, aggregated per method.
/// `jobs` caps worker threads; results do not depend on it.
std::vector<BenchmarkRow> run_benchmark(const SimConfig& config, const std::vector<Method>& methods, double q,
                                        std::size_t reps, std::size_t jobs = 1, const MethodOptions& options = {});

std::vector<BenchmarkRow> sweep_nominal_levels(const SimConfig& config, const std::vector<Method>& methods,
                                               const std::vector<double>& q_grid, std::size_t reps,
                                               std::size_t jobs = 1, const MethodOptions& options = {});

std::vector<double> default_q_grid();  // 0.05, 0.10, ..., 0.50

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);

}  // namespace mcs
