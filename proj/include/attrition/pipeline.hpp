#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attrition/evaluate.hpp"
#include "attrition/forest.hpp"
#include "attrition/preprocess.hpp"

namespace attrition {

struct PipelineConfig {
  std::filesystem::path data;
  std::filesystem::path schema;
  std::filesystem::path out = "attrition_out";
  OrderPolicy encoding_policy = OrderPolicy::Alphabetical;
  std::size_t onehot_threshold = 5;
  /// forest | tree | logreg | majority
  std::string model = "forest";
  ForestParams forest;
  CvScheme cv = CvScheme::loocv();
  bool oversample = true;
  std::uint64_t seed = 0;
  /// Fraction of rows held out (before oversampling) and scored separately.
  std::optional<double> holdout;
  std::size_t loocv_max_rows = 2000;
  std::size_t histogram_bins = 10;
  bool lenient = false;

  /// Applies one key (CLI flag name without dashes) and its textual value.
  void set(std::string_view key, std::string_view value);
  /// Throws ConfigError on out-of-range settings. Does not touch the filesystem.
  void validate() const;
};

/// Flat "key = value" document; keys are the CLI flag names.
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

struct PipelineResult {
  /// Stage names in execution order.
  std::vector<std::string> stages;
  std::vector<std::filesystem::path> artifacts;
  std::optional<CVResult> cv;
  std::optional<EvaluationReport> training_metrics;
  std::optional<EvaluationReport> holdout_metrics;
  std::vector<std::pair<std::string, double>> comparison;
};

/// ingest -> eda -> impute -> encode -> scale -> split -> oversample -> cv -> fit -> score,
/// writing eda.json, preprocessor.json, cv_result.json, model.json and metrics.json
/// (plus metrics.txt). On failure every file this run wrote is removed.
PipelineResult run_pipeline(const PipelineConfig& config);

/// As run_pipeline without the cross-validation stage.
PipelineResult train_command(const PipelineConfig& config);

/// Cross-validates forest, tree, logreg and majority under the same scheme and seed;
/// writes comparison.csv.
PipelineResult compare_command(const PipelineConfig& config);

/// Distribution CSVs, correlations.json and missing_counts.csv; fits nothing.
PipelineResult eda_command(const PipelineConfig& config);

}  // namespace attrition
