#include "attrition/models.hpp"

#include "attrition/errors.hpp"

namespace attrition {

void MajorityClassifier::fit(const Table&, std::span<const int> target) {
  ClassCounts counts;
  for (const int label : target) counts.add(label);
  label_ = counts.majority();
}

std::vector<int> MajorityClassifier::predict(const Table& features) const {
  return std::vector<int>(features.n_rows(), label_);
}

nlohmann::ordered_json MajorityClassifier::to_json() const {
  return {{"model", "majority"}, {"label", label_}};
}

void TreeClassifier::fit(const Table& features, std::span<const int> target) {
  tree_ = build_tree(features, target, params_);
}

const DecisionTree& TreeClassifier::tree() const {
  if (!tree_) throw ModelError("tree classifier is not fitted");
  return *tree_;
}

std::vector<int> TreeClassifier::predict(const Table& features) const {
  return tree().predict_all(features);
}

nlohmann::ordered_json TreeClassifier::to_json() const {
  nlohmann::ordered_json doc;
  doc["model"] = "tree";
  doc["tree"] = tree().to_json();
  return doc;
}

void ForestClassifier::fit(const Table& features, std::span<const int> target) {
  forest_ = fit_forest(features, target, params_);
}

const RandomForest& ForestClassifier::forest() const {
  if (!forest_) throw ModelError("forest classifier is not fitted");
  return *forest_;
}

std::vector<int> ForestClassifier::predict(const Table& features) const {
  return forest().predict_all(features);
}

nlohmann::ordered_json ForestClassifier::to_json() const {
  nlohmann::ordered_json doc;
  doc["model"] = "forest";
  doc["forest"] = forest().to_json();
  return doc;
}

void LogisticClassifier::fit(const Table& features, std::span<const int> target) {
  model_ = fit_logreg(features, target, config_);
}

std::vector<int> LogisticClassifier::predict(const Table& features) const {
  if (!model_) throw ModelError("logistic classifier is not fitted");
  const DenseMatrix x = to_matrix(features);
  std::vector<int> labels(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) labels[r] = predict_logreg(*model_, x.row(r)).label;
  return labels;
}

nlohmann::ordered_json LogisticClassifier::to_json() const {
  if (!model_) throw ModelError("logistic classifier is not fitted");
  nlohmann::ordered_json doc;
  doc["model"] = "logreg";
  doc["logreg"] = model_->to_json();
  return doc;
}

ModelFactory majority_factory() {
  return [](std::uint64_t) { return std::make_unique<MajorityClassifier>(); };
}

ModelFactory tree_factory(TreeParams params) {
  return [params](std::uint64_t seed) {
    TreeParams seeded = params;
    seeded.seed = seed;
    return std::make_unique<TreeClassifier>(seeded);
  };
}

ModelFactory forest_factory(ForestParams params) {
  return [params](std::uint64_t seed) {
    ForestParams seeded = params;
    seeded.seed = seed;
    return std::make_unique<ForestClassifier>(seeded);
  };
}

ModelFactory logreg_factory(LogRegConfig config) {
  return [config](std::uint64_t seed) {
    LogRegConfig seeded = config;
    seeded.seed = seed;
    return std::make_unique<LogisticClassifier>(seeded);
  };
}

}  // namespace attrition
