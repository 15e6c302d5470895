#include "attrition/forest.hpp"

#include <cmath>
#include <numeric>

#include "attrition/errors.hpp"
#include "attrition/parallel.hpp"

namespace attrition {

std::size_t FeatureSubset::resolve(std::size_t n_features) const {
  switch (mode) {
    case Mode::All: return n_features;
    case Mode::Sqrt:
      return std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features)))));
    case Mode::Count:
      if (count == 0 || count > n_features) {
        throw ConfigError("feature subset size " + std::to_string(count) + " is outside [1, " +
                          std::to_string(n_features) + "]");
      }
      return count;
  }
  return n_features;
}

BootstrapSample bootstrap_sample(const Table& features, std::span<const int> target, Rng& rng) {
  const std::size_t n = features.n_rows();
  if (n == 0) throw DataError("cannot bootstrap an empty table");
  if (target.size() != n) throw DataError("target length differs from row count");
  BootstrapSample sample;
  sample.rows.resize(n);
  for (auto& r : sample.rows) r = rng.index(n);
  sample.features = features.select_rows(sample.rows);
  sample.target.reserve(n);
  for (const auto r : sample.rows) sample.target.push_back(target[r]);
  return sample;
}

ForestPrediction majority_vote(std::span<const int> votes) {
  ForestPrediction prediction;
  for (const int vote : votes) vote == 1 ? ++prediction.tally.votes1 : ++prediction.tally.votes0;
  prediction.label = prediction.tally.votes1 > prediction.tally.votes0 ? 1 : 0;
  return prediction;
}

RandomForest::RandomForest(ForestParams params, std::vector<DecisionTree> trees,
                           std::vector<std::string> feature_names)
    : params_(params), trees_(std::move(trees)), feature_names_(std::move(feature_names)) {
  importances_.assign(feature_names_.size(), 0.0);
  for (const auto& tree : trees_) {
    const auto decrease = tree.impurity_decrease();
    for (std::size_t f = 0; f < tree.features().size(); ++f) {
      for (std::size_t g = 0; g < feature_names_.size(); ++g) {
        if (feature_names_[g] == tree.features()[f].name) importances_[g] += decrease[f];
      }
    }
  }
  const double total = std::accumulate(importances_.begin(), importances_.end(), 0.0);
  if (total > 0.0) {
    for (auto& w : importances_) w /= total;
  }
}

ForestPrediction RandomForest::predict(const Table& table, std::size_t row) const {
  std::vector<int> votes;
  votes.reserve(trees_.size());
  for (const auto& tree : trees_) votes.push_back(tree.predict(table, row).label);
  return majority_vote(votes);
}

std::vector<int> RandomForest::predict_all(const Table& table) const {
  std::vector<std::vector<int>> per_tree(trees_.size());
  parallel_for(trees_.size(), params_.threads,
               [&](std::size_t t) { per_tree[t] = trees_[t].predict_all(table); });
  std::vector<int> labels(table.n_rows());
  std::vector<int> votes(trees_.size());
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t t = 0; t < trees_.size(); ++t) votes[t] = per_tree[t][r];
    labels[r] = majority_vote(votes).label;
  }
  return labels;
}

nlohmann::ordered_json RandomForest::to_json() const {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json params;
  params["n_estimators"] = params_.n_estimators;
  params["max_depth"] = params_.max_depth ? nlohmann::ordered_json(*params_.max_depth) : nullptr;
  params["min_samples_leaf"] = params_.min_samples_leaf;
  switch (params_.feature_subset.mode) {
    case FeatureSubset::Mode::Sqrt: params["feature_subset"] = "sqrt"; break;
    case FeatureSubset::Mode::All: params["feature_subset"] = "all"; break;
    case FeatureSubset::Mode::Count: params["feature_subset"] = params_.feature_subset.count; break;
  }
  params["bootstrap"] = params_.bootstrap;
  params["seed"] = params_.seed;
  params["tie_policy"] =
      params_.tie_policy == TiePolicy::Random ? "random" : "first_in_schema_order";
  doc["params"] = std::move(params);
  nlohmann::ordered_json importances = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < feature_names_.size(); ++i) {
    importances[feature_names_[i]] = importances_[i];
  }
  doc["feature_importances"] = std::move(importances);
  nlohmann::ordered_json trees = nlohmann::ordered_json::array();
  for (const auto& tree : trees_) trees.push_back(tree.to_json());
  doc["trees"] = std::move(trees);
  return doc;
}

RandomForest fit_forest(const Table& features, std::span<const int> target,
                        const ForestParams& params) {
  if (features.n_rows() == 0) throw DataError("cannot fit a forest on an empty training set");
  if (params.n_estimators == 0) throw ConfigError("a forest needs at least one tree");
  if (target.size() != features.n_rows()) throw DataError("target length differs from row count");

  TreeParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_samples_leaf = params.min_samples_leaf;
  tree_params.tie_policy = params.tie_policy;
  const std::size_t subset = params.feature_subset.resolve(features.n_cols());
  if (subset < features.n_cols()) tree_params.feature_subset_size = subset;

  std::vector<DecisionTree> trees(params.n_estimators);
  parallel_for(params.n_estimators, params.threads, [&](std::size_t i) {
    Rng rng(params.seed + i);
    if (params.bootstrap) {
      const auto sample = bootstrap_sample(features, target, rng);
      trees[i] = build_tree(sample.features, sample.target, tree_params, rng);
    } else {
      trees[i] = build_tree(features, target, tree_params, rng);
    }
  });
  return RandomForest(params, std::move(trees), features.column_names());
}

ForestPrediction predict_forest(const RandomForest& forest, const Table& table, std::size_t row) {
  return forest.predict(table, row);
}

std::vector<std::pair<std::string, double>> feature_importance(const RandomForest& forest) {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < forest.feature_names().size(); ++i) {
    out.emplace_back(forest.feature_names()[i], forest.feature_importances()[i]);
  }
  return out;
}

}  // namespace attrition
