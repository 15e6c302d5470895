#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attrition/dtree.hpp"
#include "attrition/rng.hpp"
#include "attrition/table.hpp"
#include "json.hpp"

namespace attrition {

/// Columns considered at each node.
struct FeatureSubset {
  enum class Mode { Sqrt, All, Count };
  Mode mode = Mode::Sqrt;
  std::size_t count = 0;

  static FeatureSubset sqrt() { return {Mode::Sqrt, 0}; }
  static FeatureSubset all() { return {Mode::All, 0}; }
  static FeatureSubset fixed(std::size_t n) { return {Mode::Count, n}; }

  /// Resolved size for `n_features` columns; sqrt rounds up.
  std::size_t resolve(std::size_t n_features) const;
};

struct ForestParams {
  std::size_t n_estimators = 100;
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_leaf = 1;
  FeatureSubset feature_subset = FeatureSubset::sqrt();
  bool bootstrap = true;
  std::uint64_t seed = 0;
  TiePolicy tie_policy = TiePolicy::FirstInSchemaOrder;
  /// Worker threads for tree construction; 0 picks the hardware concurrency.
  std::size_t threads = 0;
};

struct BootstrapSample {
  Table features;
  Labels target;
  std::vector<std::size_t> rows;
};

/// n draws with replacement, uniformly over rows.
BootstrapSample bootstrap_sample(const Table& features, std::span<const int> target, Rng& rng);

struct VoteTally {
  std::size_t votes0 = 0;
  std::size_t votes1 = 0;
  std::size_t total() const noexcept { return votes0 + votes1; }
};

struct ForestPrediction {
  int label = 0;
  VoteTally tally;
};

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(ForestParams params, std::vector<DecisionTree> trees,
               std::vector<std::string> feature_names);

  const ForestParams& params() const noexcept { return params_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }

  /// Normalized mean decrease in entropy per feature column (all zero when no tree splits).
  const std::vector<double>& feature_importances() const noexcept { return importances_; }

  ForestPrediction predict(const Table& table, std::size_t row) const;
  std::vector<int> predict_all(const Table& table) const;

  nlohmann::ordered_json to_json() const;

 private:
  ForestParams params_;
  std::vector<DecisionTree> trees_;
  std::vector<std::string> feature_names_;
  std::vector<double> importances_;
};

/// Majority vote over per-tree labels; an even split goes to class 0.
ForestPrediction majority_vote(std::span<const int> votes);

/// Tree i is grown from seed + i: bootstrap draw first, then per-node feature draws.
RandomForest fit_forest(const Table& features, std::span<const int> target,
                        const ForestParams& params = {});

ForestPrediction predict_forest(const RandomForest& forest, const Table& table, std::size_t row);

/// Feature importances keyed by column name, in feature order.
std::vector<std::pair<std::string, double>> feature_importance(const RandomForest& forest);

}  // namespace attrition
