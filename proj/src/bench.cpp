#include "mcs/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <mutex>
#include <thread>

#include "mcs/format.hpp"

namespace mcs {

Method parse_method(std::string_view text) {
  if (text == "mcs_dist" || text == "mcs_dist_clipped") return Method::McsDistClipped;
  if (text == "mcs_dist_regular") return Method::McsDistRegular;
  if (text == "mcs_learn") return Method::McsLearn;
  if (text == "cs_int") return Method::CsInt;
  if (text == "cs_ib") return Method::CsIb;
  if (text == "cs_is") return Method::CsIs;
  if (text == "bi") return Method::Bi;
  if (text == "oracle") return Method::Oracle;
  throw std::invalid_argument("unknown method '" + std::string(text) + "'");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::McsDistRegular:
      return "mcs_dist_regular";
    case Method::McsDistClipped:
      return "mcs_dist";
    case Method::McsLearn:
      return "mcs_learn";
    case Method::CsInt:
      return "cs_int";
    case Method::CsIb:
      return "cs_ib";
    case Method::CsIs:
      return "cs_is";
    case Method::Bi:
      return "bi";
    case Method::Oracle:
      return "oracle";
  }
  return "unknown";
}

std::shared_ptr<const Predictor> fit_predictor(const LabeledDataset& train, const MethodOptions& options) {
  if (options.predictor == PredictorKind::Knn) {
    return std::make_shared<KnnModel>(fit_knn(train.x, train.y, std::min(options.knn_k, train.size())));
  }
  return std::make_shared<RidgeModel>(fit_ridge(train.x, train.y, options.ridge_lambda));
}

CalibrationSplit split_calibration(const LabeledDataset& cal, Rng& rng) {
  const std::size_t n = cal.size();
  const std::size_t tenth = n / 10;
  const std::vector<std::size_t> perm = random_permutation(n, rng);
  const auto train_end = static_cast<std::ptrdiff_t>(n - 2 * tenth);
  const auto val_end = static_cast<std::ptrdiff_t>(n - tenth);
  return CalibrationSplit{subset(cal, {perm.begin(), perm.begin() + train_end}),
                          subset(cal, {perm.begin() + train_end, perm.begin() + val_end}),
                          subset(cal, {perm.begin() + val_end, perm.end()})};
}

namespace {

MethodOutput from_selection(const SelectionResult& s) {
  return MethodOutput{s.selected, s.p_values.values(), s.k_star, s.threshold};
}

MethodOutput from_intersection(const IntersectionResult& r, std::size_t m) {
  MethodOutput out;
  out.selected = r.selected;
  out.p_values.assign(m, 0.0);
  for (const SelectionResult& dim : r.per_dimension) {
    for (std::size_t j = 0; j < m; ++j) out.p_values[j] = std::max(out.p_values[j], dim.p_values[j]);
  }
  out.k_star = r.selected.size();
  return out;
}

}  // namespace

MethodOutput run_method(Method method, const LabeledDataset& cal, const UnlabeledDataset& test,
                        const TargetRegion& region, std::shared_ptr<const Predictor> predictor, double q, Rng& rng,
                        const MethodOptions& options) {
  switch (method) {
    case Method::McsDistRegular:
    case Method::McsDistClipped: {
      const DistScoreKind kind = method == Method::McsDistRegular ? DistScoreKind::Regular : DistScoreKind::Clipped;
      DistScore score(region, std::move(predictor), DistScoreSpec{kind, options.big_m, options.norm});
      return from_selection(mcs_select(cal, test, region, score, q, rng));
    }
    case Method::McsLearn: {
      const CalibrationSplit split = split_calibration(cal, rng);
      TrainConfig config = options.learn;
      config.q = q;
      config.seed = rng();
      const TrainResult trained = train_score(split.f_train, split.f_val, region, *predictor, config);
      LearnedScore score(trained.model, region, std::move(predictor));
      return from_selection(mcs_select(split.cal, test, region, score, q, rng));
    }
    case Method::CsInt:
      return from_intersection(cs_int(cal, test, region, std::move(predictor), q, rng, options.big_m), test.size());
    case Method::CsIb:
      return from_intersection(cs_ib(cal, test, region, std::move(predictor), q, rng, options.big_m), test.size());
    case Method::CsIs:
      return from_intersection(
          cs_is(cal, test, region, std::move(predictor), q, options.cs_is, rng, options.big_m).selection,
          test.size());
    case Method::Bi:
      return from_selection(bi_select(cal, test, region, q, rng, options.bi).selection);
    case Method::Oracle:
      throw std::invalid_argument("the oracle selector needs test labels and only runs inside the harness");
  }
  throw std::invalid_argument("unknown method");
}

std::vector<TrialResult> run_paired_trial(const SimConfig& config, const std::vector<Method>& methods, double q,
                                          const MethodOptions& options) {
  const SimDatasets data = gen_dataset(config);
  const TargetRegion region = task_region(config.task, config.d);
  const std::shared_ptr<const Predictor> predictor = fit_predictor(data.train, options);
  const UnlabeledDataset test = strip_labels(data.test);
  // Test labels are read only after every method has selected.
  std::vector<IndexSet> selections;
  selections.reserve(methods.size());
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (methods[i] == Method::Oracle) {
      selections.emplace_back();
      continue;
    }
    Rng rng = stream_for(config.seed, 100 + static_cast<std::uint64_t>(methods[i]));
    selections.push_back(run_method(methods[i], data.cal, test, region, predictor, q, rng, options).selected);
  }
  const std::vector<bool> truth = membership(region, data.test.y);
  std::vector<TrialResult> out;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (methods[i] == Method::Oracle) {
      for (std::size_t j = 0; j < truth.size(); ++j) {
        if (truth[j]) selections[i].push_back(j);
      }
    }
    const SelectionMetrics metrics = fdp_and_power(selections[i], truth);
    out.push_back(TrialResult{methods[i], metrics.fdp, metrics.power, selections[i].size(), config.seed});
  }
  return out;
}

TrialResult run_trial(const SimConfig& config, Method method, double q, const MethodOptions& options) {
  return run_paired_trial(config, {method}, q, options).front();
}

MeanSe mean_and_se(const std::vector<double>& values) {
  if (values.empty()) return {};
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

std::vector<BenchmarkRow> run_benchmark(const SimConfig& config, const std::vector<Method>& methods, double q,
                                        std::size_t reps, std::size_t jobs, const MethodOptions& options) {
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (methods.empty()) throw std::invalid_argument("no methods requested");
  validate(config);
  std::vector<std::vector<TrialResult>> trials(reps);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t r = next++; r < reps; r = next++) {
      try {
        SimConfig trial_config = config;
        trial_config.seed = config.seed + r;
        trials[r] = run_paired_trial(trial_config, methods, q, options);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = reps;
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, reps));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<BenchmarkRow> rows;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    std::vector<double> fdp(reps), power(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      fdp[r] = trials[r][i].fdp;
      power[r] = trials[r][i].power;
    }
    const MeanSe f = mean_and_se(fdp);
    const MeanSe p = mean_and_se(power);
    rows.push_back(BenchmarkRow{methods[i], q, f.mean, f.se, p.mean, p.se, reps});
  }
  return rows;
}

std::vector<BenchmarkRow> sweep_nominal_levels(const SimConfig& config, const std::vector<Method>& methods,
                                               const std::vector<double>& q_grid, std::size_t reps, std::size_t jobs,
                                               const MethodOptions& options) {
  if (q_grid.empty()) throw std::invalid_argument("empty q grid");
  std::vector<BenchmarkRow> rows;
  for (double q : q_grid) {
    auto level_rows = run_benchmark(config, methods, q, reps, jobs, options);
    rows.insert(rows.end(), level_rows.begin(), level_rows.end());
  }
  return rows;
}

std::vector<double> default_q_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(i / 20.0);
  return grid;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << "method,q,mean_fdr,se_fdr,mean_power,se_power,reps\n";
  for (const BenchmarkRow& r : rows) {
    out << to_string(r.method) << ',' << format_double(r.q) << ',' << format_double(r.mean_fdr) << ','
        << format_double(r.se_fdr) << ',' << format_double(r.mean_power) << ',' << format_double(r.se_power) << ','
        << r.reps << '\n';
  }
}

}  // namespace mcs
