#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "mcs/bench.hpp"
#include "mcs/csv.hpp"
#include "mcs/format.hpp"

namespace mcs::cli {
namespace {

namespace fs = std::filesystem;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Key {
  const char* name;
  const char* help;
};

const std::vector<Key> kSimKeys{
    {"setting", "data-generating setting 1-6"},
    {"task", "task 1-4"},
    {"d", "response dimension (2, 5, 10 or 30)"},
    {"p", "covariate dimension"},
    {"n-train", "training rows"},
    {"n-cal", "calibration rows"},
    {"m", "test rows"},
};

const std::vector<Key> kPredictorKeys{
    {"train", "training CSV used to fit the predictor"},
    {"predictor", "saved predictor file (instead of --train)"},
    {"predictor.kind", "ridge | knn"},
    {"predictor.lambda", "ridge penalty"},
    {"predictor.k", "neighbours for knn"},
};

const std::vector<Key> kScoreKeys{
    {"score.kind", "regular | clipped"},
    {"score.big_m", "clipping constant M"},
    {"score.norm", "1 | 2 | inf"},
};

const std::vector<Key> kLearnKeys{
    {"learn.epochs", "training epochs"},
    {"learn.lr", "learning rate"},
    {"learn.momentum", "SGD momentum"},
    {"learn.tau", "temperature of the smooth selection loss"},
    {"learn.gamma", "weight of the out-of-region penalty"},
    {"learn.loss", "l1 | l2"},
    {"learn.partitions", "validation half-splits per epoch"},
    {"learn.epsilon", "soft-rank regularization"},
    {"learn.hidden", "hidden width"},
    {"learn.family", "input family (covariate_only, prediction_only, covariate_and_prediction, full_with_y, all_inputs)"},
};

const std::vector<Key> kBaselineKeys{
    {"baseline.holdout_fraction", "cs_is hold-out fraction"},
    {"baseline.levels", "cs_is level grid, comma separated"},
    {"baseline.steps", "bi logistic gradient steps"},
    {"baseline.lr", "bi logistic learning rate"},
};

class Settings {
 public:
  explicit Settings(std::set<std::string> allowed) : allowed_(std::move(allowed)) {}

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string line;
    for (int number = 1; std::getline(in, line); ++number) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string text = trim(line);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(path + ":" + std::to_string(number) + ": expected key=value");
      }
      set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)), path + ":" + std::to_string(number));
    }
  }

  void set(const std::string& key, const std::string& value, const std::string& where) {
    if (!allowed_.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string text(const std::string& key, const std::string& fallback = "") const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string required(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required setting '" + key + "'");
    return values_.at(key);
  }

  double real(const std::string& key, double fallback) const {
    return has(key) ? parse_real(key, values_.at(key)) : fallback;
  }

  template <typename Int>
  Int integer(const std::string& key, Int fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = values_.at(key);
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("setting '" + key + "' expects an integer, got '" + v + "'");
    }
    return out;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    std::stringstream in(values_.at(key));
    for (std::string item; std::getline(in, item, ',');) out.push_back(parse_real(key, trim(item)));
    return out;
  }

  static double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
      throw ConfigError("setting '" + key + "' expects a number, got '" + v + "'");
    }
    return out;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }

 private:
  std::set<std::string> allowed_;
  std::map<std::string, std::string> values_;
};

struct Command {
  explicit Command(CLI::App* sub) : app(sub) {}
  CLI::App* app;
  std::vector<Key> keys;
  std::map<std::string, std::string> flags;
};

void add_keys(Command& cmd, const std::vector<Key>& keys) {
  for (const Key& k : keys) {
    cmd.keys.push_back(k);
    cmd.app->add_option(std::string("--") + k.name, cmd.flags[k.name], k.help);
  }
}

// Config file first, then flags on top; MCS_SEED only when neither sets the seed.
Settings resolve(const Command& cmd, const std::string& config_path) {
  std::set<std::string> allowed;
  for (const Key& k : cmd.keys) allowed.insert(k.name);
  Settings s(allowed);
  if (!config_path.empty()) s.load_file(config_path);
  for (const Key& k : cmd.keys) {
    if (cmd.app->count(std::string("--") + k.name) > 0) s.set(k.name, cmd.flags.at(k.name), "command line");
  }
  if (!s.has("seed") && allowed.count("seed")) {
    if (const char* env = std::getenv("MCS_SEED")) s.set("seed", env, "MCS_SEED");
  }
  return s;
}

std::uint64_t seed_of(const Settings& s) { return s.integer<std::uint64_t>("seed", 0); }

double level_of(const Settings& s) {
  const double q = s.real("q", 0.3);
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("q must lie in (0, 1)");
  return q;
}

SimConfig sim_config(const Settings& s) {
  SimConfig c;
  c.setting = s.integer<int>("setting", c.setting);
  c.task = s.integer<int>("task", c.task);
  c.d = s.integer<std::size_t>("d", c.d);
  c.p = s.integer<std::size_t>("p", c.p);
  c.n_train = s.integer<std::size_t>("n-train", c.n_train);
  c.n_cal = s.integer<std::size_t>("n-cal", c.n_cal);
  c.m = s.integer<std::size_t>("m", c.m);
  c.seed = seed_of(s);
  try {
    validate(c);
    task_region(c.task, c.d);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

MethodOptions method_options(const Settings& s) {
  MethodOptions o;
  const std::string kind = s.text("predictor.kind", "ridge");
  if (kind == "knn") {
    o.predictor = PredictorKind::Knn;
  } else if (kind != "ridge") {
    throw ConfigError("predictor.kind must be ridge or knn");
  }
  o.ridge_lambda = s.real("predictor.lambda", o.ridge_lambda);
  o.knn_k = s.integer<std::size_t>("predictor.k", o.knn_k);
  o.big_m = s.real("score.big_m", o.big_m);
  if (!(o.big_m > 0.0)) throw ConfigError("score.big_m must be positive");
  o.learn.big_m = o.big_m;
  o.bi.big_m = o.big_m;
  if (s.has("score.norm")) o.norm = parse_norm(s.text("score.norm"));

  TrainConfig& t = o.learn;
  t.epochs = s.integer<int>("learn.epochs", t.epochs);
  t.lr = s.real("learn.lr", t.lr);
  t.momentum = s.real("learn.momentum", t.momentum);
  t.tau = s.real("learn.tau", t.tau);
  t.gamma = s.real("learn.gamma", t.gamma);
  t.validation_partitions = s.integer<int>("learn.partitions", t.validation_partitions);
  t.epsilon = s.real("learn.epsilon", t.epsilon);
  t.hidden = s.integer<std::size_t>("learn.hidden", t.hidden);
  if (s.has("learn.family")) t.family = parse_input_family(s.text("learn.family"));
  if (s.has("learn.loss")) {
    const std::string loss = s.text("learn.loss");
    if (loss == "l1" || loss == "L1") {
      t.loss = LossKind::L1;
    } else if (loss == "l2" || loss == "L2") {
      t.loss = LossKind::L2;
    } else {
      throw ConfigError("learn.loss must be l1 or l2");
    }
  }

  o.cs_is.holdout_fraction = s.real("baseline.holdout_fraction", o.cs_is.holdout_fraction);
  if (s.has("baseline.levels")) o.cs_is.level_grid = s.reals("baseline.levels");
  o.bi.classifier.steps = s.integer<int>("baseline.steps", o.bi.classifier.steps);
  o.bi.classifier.lr = s.real("baseline.lr", o.bi.classifier.lr);
  return o;
}

Method method_of(const Settings& s) {
  Method method = parse_method(s.text("method", "mcs_dist"));
  if (method == Method::Oracle) throw ConfigError("the oracle needs test labels and is only available in benchmarks");
  if (s.has("score.kind")) {
    const DistScoreKind kind = parse_dist_score_kind(s.text("score.kind"));
    if (kind == DistScoreKind::ProbClipped) throw ConfigError("score.kind=prob_clipped is what --method bi runs");
    if (method == Method::McsDistClipped && kind == DistScoreKind::Regular) method = Method::McsDistRegular;
  }
  return method;
}

std::vector<Method> methods_of(const Settings& s) {
  std::vector<Method> out;
  std::stringstream in(s.text("methods", "mcs_dist,cs_int,cs_ib,bi"));
  for (std::string item; std::getline(in, item, ',');) out.push_back(parse_method(Settings::trim(item)));
  return out;
}

TargetRegion region_of(const Settings& s) {
  const std::string path = s.required("region");
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open region file '" + path + "'");
  std::stringstream text;
  text << in.rdbuf();
  return parse_region(text.str());
}

LabeledDataset read_labeled(const std::string& path, bool need_responses) {
  if (!fs::exists(path)) throw ConfigError("file '" + path + "' does not exist");
  LabeledDataset data = table_to_dataset(read_csv_file(path), path);
  if (need_responses && data.response_dim() == 0) throw CsvError(path + ": no y columns");
  return data;
}

std::shared_ptr<const Predictor> predictor_of(const Settings& s, const MethodOptions& options) {
  if (s.has("predictor")) {
    std::ifstream in(s.text("predictor"));
    if (!in) throw ConfigError("cannot open predictor file '" + s.text("predictor") + "'");
    return std::shared_ptr<const Predictor>(load_predictor(in));
  }
  if (s.has("train")) return fit_predictor(read_labeled(s.text("train"), true), options);
  throw ConfigError("a predictor is required: pass --train or --predictor");
}

std::ofstream open_output(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

void write_dataset_file(const std::string& path, const LabeledDataset& data) {
  std::ofstream out = open_output(path);
  write_dataset_csv(out, data);
}

int cmd_simulate(const Settings& s, std::ostream& log) {
  const SimConfig config = sim_config(s);
  const fs::path dir = s.required("out-dir");
  const SimDatasets data = gen_dataset(config);
  write_dataset_file((dir / "train.csv").string(), data.train);
  write_dataset_file((dir / "cal.csv").string(), data.cal);
  write_dataset_file((dir / "test.csv").string(), data.test);
  std::ofstream region_file = open_output((dir / "region.txt").string());
  region_file << format_region(task_region(config.task, config.d));
  log << "wrote " << data.train.size() << "/" << data.cal.size() << "/" << data.test.size()
      << " train/cal/test rows to " << dir.string() << "\n";
  return 0;
}

int cmd_select(const Settings& s, std::ostream& log) {
  const TargetRegion region = region_of(s);
  const Method method = method_of(s);
  const double q = level_of(s);
  const MethodOptions options = method_options(s);
  const std::string out_path = s.required("out");
  const LabeledDataset cal = read_labeled(s.required("cal"), true);
  const UnlabeledDataset test = strip_labels(read_labeled(s.required("test"), false));
  if (cal.response_dim() != region.dimension()) {
    throw ConfigError("region dimension " + std::to_string(region.dimension()) + " does not match " +
                      std::to_string(cal.response_dim()) + " calibration responses");
  }
  Rng rng = stream_for(seed_of(s), 0);

  MethodOutput result;
  if (method == Method::Bi) {
    result = run_method(method, cal, test, region, nullptr, q, rng, options);
  } else if (method == Method::McsLearn && s.has("score-model")) {
    std::ifstream in(s.text("score-model"));
    if (!in) throw ConfigError("cannot open score model '" + s.text("score-model") + "'");
    LearnedScore score(ScoreModel::load(in), region, predictor_of(s, options));
    const SelectionResult sel = mcs_select(cal, test, region, score, q, rng);
    result = MethodOutput{sel.selected, sel.p_values.values(), sel.k_star, sel.threshold};
  } else {
    result = run_method(method, cal, test, region, predictor_of(s, options), q, rng, options);
  }

  std::ofstream out = open_output(out_path);
  out << "test_row_index,p_value,selected\n";
  std::size_t next = 0;
  for (std::size_t j = 0; j < test.size(); ++j) {
    const bool selected = next < result.selected.size() && result.selected[next] == j;
    next += selected;
    out << j << ',' << format_double(result.p_values[j]) << ',' << (selected ? 1 : 0) << '\n';
  }
  log << "selected=" << result.selected.size() << " k_star=" << result.k_star
      << " threshold=" << format_double(result.threshold) << "\n";
  return 0;
}

int cmd_train_score(const Settings& s, std::ostream& log) {
  const TargetRegion region = region_of(s);
  MethodOptions options = method_options(s);
  options.learn.q = level_of(s);
  const std::string model_path = s.required("model-out");
  const std::string cal_path = s.required("cal-out");
  const std::string log_path = s.required("log-out");
  const LabeledDataset cal = read_labeled(s.required("cal"), true);
  if (cal.response_dim() != region.dimension()) throw ConfigError("region dimension does not match the responses");
  const std::shared_ptr<const Predictor> predictor = predictor_of(s, options);

  Rng rng = stream_for(seed_of(s), 0);
  const CalibrationSplit split = split_calibration(cal, rng);
  options.learn.seed = rng();
  const TrainResult trained = train_score(split.f_train, split.f_val, region, *predictor, options.learn);

  std::ofstream model_file = open_output(model_path);
  trained.model.save(model_file);
  write_dataset_file(cal_path, split.cal);
  if (s.has("predictor-out")) {
    std::ofstream predictor_file = open_output(s.text("predictor-out"));
    predictor->save(predictor_file);
  }
  std::ofstream csv = open_output(log_path);
  csv << "epoch,loss,mean_validation_power\n";
  for (const EpochLog& e : trained.log) {
    csv << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.validation_power) << '\n';
  }
  log << "f_train=" << split.f_train.size() << " f_val=" << split.f_val.size() << " cal=" << split.cal.size()
      << " best_epoch=" << trained.best_epoch << "\n";
  return 0;
}

int cmd_benchmark(const Settings& s, std::ostream& log, bool sweep) {
  const SimConfig config = sim_config(s);
  const std::vector<Method> methods = methods_of(s);
  const MethodOptions options = method_options(s);
  const auto reps = s.integer<std::size_t>("reps", 100);
  const auto jobs = s.integer<std::size_t>("jobs", 1);
  if (reps == 0 || jobs == 0) throw ConfigError("reps and jobs must be positive");

  std::vector<BenchmarkRow> rows;
  if (sweep) {
    const std::vector<double> grid = s.has("q-grid") ? s.reals("q-grid") : default_q_grid();
    for (double q : grid) {
      if (!(q > 0.0 && q < 1.0)) throw ConfigError("every q in q-grid must lie in (0, 1)");
    }
    rows = sweep_nominal_levels(config, methods, grid, reps, jobs, options);
  } else {
    rows = run_benchmark(config, methods, level_of(s), reps, jobs, options);
  }
  if (s.has("out")) {
    std::ofstream out = open_output(s.text("out"));
    write_benchmark_csv(out, rows);
  } else {
    write_benchmark_csv(log, rows);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multivariate conformal selection", "mcs"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "key=value settings file; flags override it")->check(CLI::ExistingFile);

  const std::vector<Key> seed_key{{"seed", "master seed (falls back to MCS_SEED)"}};
  const std::vector<Key> jobs_key{{"jobs", "worker threads"}};

  Command simulate{app.add_subcommand("simulate", "write simulated train/cal/test CSVs and region.txt")};
  add_keys(simulate, kSimKeys);
  add_keys(simulate, seed_key);
  add_keys(simulate, {{"out-dir", "output directory"}});

  Command select{app.add_subcommand("select", "run a selection method on CSV data")};
  add_keys(select, {{"cal", "calibration CSV (x and y columns)"},
                    {"test", "test CSV (x columns; y columns are ignored)"},
                    {"region", "region spec file"},
                    {"method", "mcs_dist | mcs_learn | cs_int | cs_ib | cs_is | bi"},
                    {"q", "nominal FDR level"},
                    {"out", "selection CSV"},
                    {"score-model", "trained score model for mcs_learn"}});
  add_keys(select, seed_key);
  add_keys(select, kPredictorKeys);
  add_keys(select, kScoreKeys);
  add_keys(select, kLearnKeys);
  add_keys(select, kBaselineKeys);

  Command train{app.add_subcommand("train-score", "train a learned score on an 8:1:1 calibration split")};
  add_keys(train, {{"cal", "calibration CSV"},
                   {"region", "region spec file"},
                   {"q", "nominal FDR level used in training"},
                   {"model-out", "score model file"},
                   {"cal-out", "held-back calibration CSV for select"},
                   {"log-out", "training log CSV"},
                   {"predictor-out", "predictor file"}});
  add_keys(train, seed_key);
  add_keys(train, kPredictorKeys);
  add_keys(train, kScoreKeys);
  add_keys(train, kLearnKeys);

  Command bench{app.add_subcommand("benchmark", "Monte Carlo FDR and power at one level")};
  Command sweep{app.add_subcommand("sweep", "Monte Carlo FDR and power over a grid of levels")};
  for (Command* cmd : {&bench, &sweep}) {
    add_keys(*cmd, kSimKeys);
    add_keys(*cmd, seed_key);
    add_keys(*cmd, jobs_key);
    add_keys(*cmd, {{"methods", "comma-separated methods"}, {"reps", "repetitions"}, {"out", "result CSV"}});
    add_keys(*cmd, {{"predictor.kind", "ridge | knn"}, {"predictor.lambda", "ridge penalty"}, {"predictor.k", "knn k"}});
    add_keys(*cmd, kScoreKeys);
    add_keys(*cmd, kLearnKeys);
    add_keys(*cmd, kBaselineKeys);
  }
  add_keys(bench, {{"q", "nominal FDR level"}});
  add_keys(sweep, {{"q-grid", "comma-separated levels (default 0.05,...,0.5)"}});

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (simulate.app->parsed()) return cmd_simulate(resolve(simulate, config_path), out);
    if (select.app->parsed()) return cmd_select(resolve(select, config_path), out);
    if (train.app->parsed()) return cmd_train_score(resolve(train, config_path), out);
    if (bench.app->parsed()) return cmd_benchmark(resolve(bench, config_path), out, false);
    return cmd_benchmark(resolve(sweep, config_path), out, true);
  } catch (const CsvError& e) {
    err << "error: " << e.what() << "\n";
    return kExitCsv;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mcs::cli
