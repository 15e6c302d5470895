#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attrition/baselines.hpp"
#include "attrition/dtree.hpp"
#include "attrition/evaluate.hpp"
#include "attrition/forest.hpp"
#include "json.hpp"

namespace attrition {

/// Trainable binary classifier used by the CV harness and model comparison.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::string name() const = 0;
  virtual void fit(const Table& features, std::span<const int> target) = 0;
  virtual std::vector<int> predict(const Table& features) const = 0;
  virtual nlohmann::ordered_json to_json() const = 0;
};

/// Predicts the training majority (ties -> 0) for every row.
class MajorityClassifier : public Classifier {
 public:
  std::string name() const override { return "majority"; }
  void fit(const Table& features, std::span<const int> target) override;
  std::vector<int> predict(const Table& features) const override;
  nlohmann::ordered_json to_json() const override;

  int label() const noexcept { return label_; }

 private:
  int label_ = 0;
};

class TreeClassifier : public Classifier {
 public:
  explicit TreeClassifier(TreeParams params) : params_(params) {}
  std::string name() const override { return "tree"; }
  void fit(const Table& features, std::span<const int> target) override;
  std::vector<int> predict(const Table& features) const override;
  nlohmann::ordered_json to_json() const override;

  const DecisionTree& tree() const;

 private:
  TreeParams params_;
  std::optional<DecisionTree> tree_;
};

class ForestClassifier : public Classifier {
 public:
  explicit ForestClassifier(ForestParams params) : params_(params) {}
  std::string name() const override { return "forest"; }
  void fit(const Table& features, std::span<const int> target) override;
  std::vector<int> predict(const Table& features) const override;
  nlohmann::ordered_json to_json() const override;

  const RandomForest& forest() const;

 private:
  ForestParams params_;
  std::optional<RandomForest> forest_;
};

class LogisticClassifier : public Classifier {
 public:
  explicit LogisticClassifier(LogRegConfig config) : config_(config) {}
  std::string name() const override { return "logreg"; }
  void fit(const Table& features, std::span<const int> target) override;
  std::vector<int> predict(const Table& features) const override;
  nlohmann::ordered_json to_json() const override;

 private:
  LogRegConfig config_;
  std::optional<LogisticModel> model_;
};

/// Factories taking the per-fold seed into the model's own seed.
ModelFactory majority_factory();
ModelFactory tree_factory(TreeParams params = {});
ModelFactory forest_factory(ForestParams params = {});
ModelFactory logreg_factory(LogRegConfig config = {});

}  // namespace attrition
