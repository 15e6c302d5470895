#include "attrition/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

#include "attrition/baselines.hpp"
#include "attrition/eda.hpp"
#include "attrition/errors.hpp"
#include "attrition/models.hpp"

namespace attrition {
namespace {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
    throw ConfigError("'" + std::string(key) + "' expects a non-negative integer, got '" +
                      std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("'" + std::string(key) + "' expects true or false, got '" + std::string(value) + "'");
}

// Files written by one command; removed again unless the command completes.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}
  ArtifactWriter(const ArtifactWriter&) = delete;
  ArtifactWriter& operator=(const ArtifactWriter&) = delete;

  ~ArtifactWriter() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& path : written_) std::filesystem::remove(path, ec);
    for (auto it = created_dirs_.rbegin(); it != created_dirs_.rend(); ++it) {
      std::filesystem::remove(*it, ec);  // only succeeds when empty
    }
  }

  void write(const std::string& name, const std::string& content) {
    ensure_dir(dir_);
    const auto path = dir_ / name;
    written_.push_back(path);
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }

  // indent < 0 writes compact JSON (used for the potentially large model).
  void write_json(const std::string& name, const nlohmann::ordered_json& doc, int indent = 2) {
    write(name, doc.dump(indent) + "\n");
  }

  std::vector<std::filesystem::path> commit() {
    committed_ = true;
    return written_;
  }

 private:
  void ensure_dir(const std::filesystem::path& dir) {
    if (dir.empty() || std::filesystem::exists(dir)) return;
    ensure_dir(dir.parent_path());
    std::filesystem::create_directory(dir);
    created_dirs_.push_back(dir);
  }

  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
  std::vector<std::filesystem::path> created_dirs_;
  bool committed_ = false;
};

// Completed stages plus the one currently running, for error reporting.
struct StageLog {
  std::vector<std::string>& done;
  std::string running;

  void start(std::string stage) { running = std::move(stage); }
  void finish(std::string_view stage) { done.emplace_back(stage); }
};

// Re-raises the in-flight exception with the stage name prefixed, keeping its
// exit-code category.
[[noreturn]] void rethrow_in_stage(const std::string& stage) {
  const std::string prefix = stage + " stage failed: ";
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const ModelError& e) {
    throw ModelError(prefix + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix + e.what());
  }
}

struct Prepared {
  Table raw;
  FittedPreprocessor preprocessor;
  Labels target;
  Table features;
  // Held-out rows, already transformed; empty without --holdout.
  std::optional<Table> holdout_features;
  Labels holdout_target;
};

Table load_table(const PipelineConfig& config, StageLog& log) {
  log.start("ingest");
  if (config.data.empty()) throw ConfigError("no data file given (--data)");
  if (config.schema.empty()) throw ConfigError("no schema file given (--schema)");
  const TableSchema schema = load_schema(config.schema);
  CsvOptions options;
  options.lenient = config.lenient;
  Table table = load_csv(config.data, schema, options);
  log.finish("ingest");
  return table;
}

// Impute, encode and scale the model view of `raw`, then split X / y and
// optionally hold rows out and oversample the rest.
Prepared prepare(const PipelineConfig& config, Table raw, StageLog& log) {
  Prepared prepared;
  prepared.raw = std::move(raw);
  const Table model_view = prepared.raw.without_identifiers();

  PreprocessOptions options;
  options.order_policy = config.encoding_policy;
  options.one_hot_threshold = config.onehot_threshold;
  log.start("impute");
  prepared.preprocessor =
      FittedPreprocessor::fit(model_view, options, [&](std::string_view stage) {
        log.finish(stage);
        log.start(stage == "impute" ? "encode" : "scale");
      });
  const Table transformed = prepared.preprocessor.transform(model_view);

  log.start("split");
  SplitData split = split_columns(transformed);
  log.finish("split");

  Table features = std::move(split.features);
  Labels target = std::move(split.target);
  if (config.holdout) {
    log.start("holdout");
    const std::size_t n = features.n_rows();
    const auto held = static_cast<std::size_t>(static_cast<double>(n) * *config.holdout);
    if (held == 0 || held >= n) {
      throw DataError("holdout fraction leaves no rows on one side (" + std::to_string(n) + " rows)");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(config.seed, 0x686f6c64));
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    prepared.holdout_features = features.select_rows(test);
    for (const auto r : test) prepared.holdout_target.push_back(target[r]);
    Labels train_target;
    for (const auto r : train) train_target.push_back(target[r]);
    features = features.select_rows(train);
    target = std::move(train_target);
    log.finish("holdout");
  }

  if (config.oversample) {
    log.start("oversample");
    Rng rng(mix_seed(config.seed, 0x6f766572));
    auto balanced = oversample_minority(features, target, rng);
    features = std::move(balanced.features);
    target = std::move(balanced.target);
    log.finish("oversample");
  }
  prepared.features = std::move(features);
  prepared.target = std::move(target);
  return prepared;
}

ModelFactory factory_for(const PipelineConfig& config) {
  if (config.model == "forest") return forest_factory(config.forest);
  if (config.model == "tree") {
    TreeParams params;
    params.max_depth = config.forest.max_depth;
    params.min_samples_leaf = config.forest.min_samples_leaf;
    return tree_factory(params);
  }
  if (config.model == "logreg") return logreg_factory();
  if (config.model == "majority") return majority_factory();
  throw ConfigError("unknown model '" + config.model + "'");
}

nlohmann::ordered_json eda_json(const Table& raw, const EdaReport& report) {
  nlohmann::ordered_json doc;
  doc["rows"] = raw.n_rows();
  nlohmann::ordered_json missing = nlohmann::ordered_json::object();
  for (const auto& [name, count] : missing_counts(raw)) missing[name] = count;
  doc["missing_counts"] = std::move(missing);

  nlohmann::ordered_json categorical = nlohmann::ordered_json::array();
  for (const auto& dist : report.categorical) {
    nlohmann::ordered_json cats = nlohmann::ordered_json::object();
    for (const auto& [name, counts] : dist.categories) cats[name] = {counts.target0, counts.target1};
    categorical.push_back({{"column", dist.column},
                           {"categories", std::move(cats)},
                           {"missing", {dist.missing.target0, dist.missing.target1}}});
  }
  doc["categorical"] = std::move(categorical);

  nlohmann::ordered_json numeric = nlohmann::ordered_json::array();
  for (const auto& dist : report.numeric) {
    std::vector<std::size_t> c0;
    std::vector<std::size_t> c1;
    for (const auto& bin : dist.bins) {
      c0.push_back(bin.target0);
      c1.push_back(bin.target1);
    }
    numeric.push_back({{"column", dist.column},
                       {"edges", dist.edges},
                       {"target_0", c0},
                       {"target_1", c1},
                       {"missing", {dist.missing.target0, dist.missing.target1}}});
  }
  doc["numeric"] = std::move(numeric);
  doc["correlations"] = correlation_json(report);
  return doc;
}

void check_cv_feasible(const PipelineConfig& config, std::size_t rows) {
  if (config.cv.kind == CvScheme::Kind::Loocv && rows > config.loocv_max_rows) {
    throw ConfigError("leave-one-out over " + std::to_string(rows) + " rows exceeds the cap of " +
                      std::to_string(config.loocv_max_rows) +
                      " (raise --loocv-max-rows or use --cv kfold:10)");
  }
  if (config.cv.kind == CvScheme::Kind::KFold && config.cv.k > rows) {
    throw ConfigError("kfold:" + std::to_string(config.cv.k) + " needs at least that many rows, have " +
                      std::to_string(rows));
  }
}

PipelineResult fit_and_report(const PipelineConfig& config, bool with_cv) {
  config.validate();
  PipelineResult result;
  StageLog log{result.stages, {}};
  try {
    ArtifactWriter writer(config.out);
    Table raw = load_table(config, log);

    log.start("eda");
    const EdaReport eda = run_eda(raw, config.histogram_bins);
    const auto eda_doc = eda_json(raw, eda);
    log.finish("eda");

    Prepared prepared = prepare(config, std::move(raw), log);
    const ModelFactory factory = factory_for(config);

    nlohmann::ordered_json metrics_doc;
    std::optional<EvaluationReport> cv_report;
    if (with_cv) {
      log.start("cv");
      check_cv_feasible(config, prepared.features.n_rows());
      result.cv = cross_validate(factory, prepared.features, prepared.target, config.cv, config.seed);
      cv_report = metrics(prepared.target, result.cv->predictions);
      log.finish("cv");
    }

    log.start("fit");
    auto model = factory(config.seed);
    model->fit(prepared.features, prepared.target);
    log.finish("fit");

    log.start("score");
    result.training_metrics = metrics(prepared.target, model->predict(prepared.features));
    metrics_doc["training"] = result.training_metrics->to_json();
    std::string metrics_text = "training (in-sample)\n" + result.training_metrics->to_text();
    if (cv_report) {
      metrics_doc["cv"] = cv_report->to_json();
      metrics_doc["cv"]["scheme"] = config.cv.to_string();
      metrics_doc["cv"]["mean_fold_accuracy"] = result.cv->mean_accuracy;
      metrics_text += "\ncross-validation (" + config.cv.to_string() + ", out-of-fold)\n" +
                      cv_report->to_text();
    }
    if (prepared.holdout_features) {
      result.holdout_metrics =
          metrics(prepared.holdout_target, model->predict(*prepared.holdout_features));
      metrics_doc["holdout"] = result.holdout_metrics->to_json();
      metrics_text += "\nholdout\n" + result.holdout_metrics->to_text();
    }
    log.finish("score");

    log.start("write");
    writer.write_json("eda.json", eda_doc);
    writer.write_json("preprocessor.json", prepared.preprocessor.to_json());
    if (with_cv) writer.write_json("cv_result.json", result.cv->to_json());
    writer.write_json("model.json", model->to_json(), -1);
    writer.write_json("metrics.json", metrics_doc);
    writer.write("metrics.txt", metrics_text);
    log.finish("write");
    result.artifacts = writer.commit();
  } catch (...) {
    rethrow_in_stage(log.running);
  }
  return result;
}

}  // namespace

void PipelineConfig::set(std::string_view raw_key, std::string_view raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "data") {
    data = value;
  } else if (key == "schema") {
    schema = value;
  } else if (key == "out") {
    out = value;
  } else if (key == "model") {
    model = value;
  } else if (key == "n-trees") {
    forest.n_estimators = parse_integer<std::size_t>(key, value);
  } else if (key == "max-depth") {
    if (value.empty() || value == "none") {
      forest.max_depth.reset();
    } else {
      forest.max_depth = parse_integer<std::size_t>(key, value);
    }
  } else if (key == "min-samples-leaf") {
    forest.min_samples_leaf = parse_integer<std::size_t>(key, value);
  } else if (key == "feature-subset") {
    if (value == "sqrt") {
      forest.feature_subset = FeatureSubset::sqrt();
    } else if (value == "all") {
      forest.feature_subset = FeatureSubset::all();
    } else {
      forest.feature_subset = FeatureSubset::fixed(parse_integer<std::size_t>(key, value));
    }
  } else if (key == "bootstrap") {
    forest.bootstrap = parse_bool(key, value);
  } else if (key == "threads") {
    forest.threads = parse_integer<std::size_t>(key, value);
  } else if (key == "cv") {
    cv = CvScheme::parse(value);
  } else if (key == "oversample") {
    oversample = parse_bool(key, value);
  } else if (key == "encoding-policy") {
    encoding_policy = parse_order_policy(value);
  } else if (key == "onehot-threshold") {
    onehot_threshold = parse_integer<std::size_t>(key, value);
  } else if (key == "seed") {
    seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "holdout") {
    if (value.empty() || value == "none") {
      holdout.reset();
    } else {
      double fraction = 0.0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), fraction);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("'holdout' expects a fraction, got '" + value + "'");
      }
      holdout = fraction;
    }
  } else if (key == "loocv-max-rows") {
    loocv_max_rows = parse_integer<std::size_t>(key, value);
  } else if (key == "bins") {
    histogram_bins = parse_integer<std::size_t>(key, value);
  } else if (key == "lenient") {
    lenient = parse_bool(key, value);
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

void PipelineConfig::validate() const {
  if (model != "forest" && model != "tree" && model != "logreg" && model != "majority") {
    throw ConfigError("unknown model '" + model + "' (expected forest, tree, logreg or majority)");
  }
  if (forest.n_estimators == 0) throw ConfigError("n-trees must be at least 1");
  if (forest.min_samples_leaf == 0) throw ConfigError("min-samples-leaf must be at least 1");
  if (cv.kind == CvScheme::Kind::KFold && cv.k < 2) {
    throw ConfigError("kfold needs k >= 2, got " + std::to_string(cv.k));
  }
  if (holdout && !(*holdout > 0.0 && *holdout < 1.0)) {
    throw ConfigError("holdout fraction must lie strictly between 0 and 1");
  }
  if (histogram_bins == 0) throw ConfigError("bins must be at least 1");
  if (onehot_threshold == 0) throw ConfigError("onehot-threshold must be at least 1");
}

PipelineConfig parse_config(std::istream& in, PipelineConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    base.set(std::string_view(text).substr(0, eq), std::string_view(text).substr(eq + 1));
  }
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

PipelineResult run_pipeline(const PipelineConfig& config) { return fit_and_report(config, true); }

PipelineResult train_command(const PipelineConfig& config) { return fit_and_report(config, false); }

PipelineResult compare_command(const PipelineConfig& config) {
  config.validate();
  PipelineResult result;
  StageLog log{result.stages, {}};
  try {
    ArtifactWriter writer(config.out);
    Prepared prepared = prepare(config, load_table(config, log), log);

    log.start("compare");
    check_cv_feasible(config, prepared.features.n_rows());
    TreeParams tree_params;
    tree_params.max_depth = config.forest.max_depth;
    tree_params.min_samples_leaf = config.forest.min_samples_leaf;
    const std::vector<RegisteredModel> models{
        {"forest", forest_factory(config.forest)},
        {"tree", tree_factory(tree_params)},
        {"logreg", logreg_factory()},
        {"majority", majority_factory()},
    };
    const auto scores =
        compare_models(prepared.features, prepared.target, config.cv, models, config.seed);
    for (const auto& score : scores) result.comparison.emplace_back(score.model, score.accuracy);
    log.finish("compare");

    log.start("write");
    writer.write("comparison.csv", comparison_csv(scores));
    log.finish("write");
    result.artifacts = writer.commit();
  } catch (...) {
    rethrow_in_stage(log.running);
  }
  return result;
}

PipelineResult eda_command(const PipelineConfig& config) {
  config.validate();
  PipelineResult result;
  StageLog log{result.stages, {}};
  try {
    ArtifactWriter writer(config.out);
    const Table raw = load_table(config, log);

    log.start("eda");
    const EdaReport report = run_eda(raw, config.histogram_bins);
    log.finish("eda");

    log.start("write");
    for (const auto& dist : report.categorical) {
      writer.write("categorical_" + dist.column + ".csv", distribution_csv(dist));
    }
    for (const auto& dist : report.numeric) {
      writer.write("numeric_" + dist.column + ".csv", distribution_csv(dist));
    }
    writer.write_json("correlations.json", correlation_json(report));
    std::ostringstream missing;
    missing << "column,missing\n";
    for (const auto& [name, count] : missing_counts(raw)) missing << name << ',' << count << '\n';
    writer.write("missing_counts.csv", missing.str());
    log.finish("write");
    result.artifacts = writer.commit();
  } catch (...) {
    rethrow_in_stage(log.running);
  }
  return result;
}

}  // namespace attrition
