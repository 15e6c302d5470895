#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "attrition/rng.hpp"
#include "attrition/table.hpp"
#include "json.hpp"

namespace attrition {

struct ClassCounts {
  std::size_t n0 = 0;
  std::size_t n1 = 0;

  std::size_t total() const noexcept { return n0 + n1; }
  /// Majority class; an even split goes to class 0.
  int majority() const noexcept { return n1 > n0 ? 1 : 0; }
  void add(int label) noexcept { label == 1 ? ++n1 : ++n0; }

  bool operator==(const ClassCounts&) const = default;
};

/// Shannon entropy in bits, with 0·log 0 = 0. Throws if every count is zero.
double entropy(std::span<const std::size_t> counts);
double entropy(const ClassCounts& counts);

struct PartitionCell {
  std::string label;
  ClassCounts counts;
};

enum class SplitKind { CategoricalMultiway, NumericThreshold };

struct SplitCandidate {
  std::string column;
  SplitKind kind = SplitKind::CategoricalMultiway;
  /// Numeric splits send values >= threshold one way and values < threshold the other.
  double threshold = 0.0;
  double parent_entropy = 0.0;
  double conditional_entropy = 0.0;
  double information_gain = 0.0;
  /// Non-empty children. Numeric order is {>= threshold, < threshold}.
  std::vector<PartitionCell> partitions;
  /// A numeric split with an empty side; its gain is reported as 0.
  bool degenerate = false;
};

/// Arithmetic mean of the values reaching a node.
double numeric_threshold(std::span<const double> values);

/// Size-weighted entropy of the target within each value of `column`
/// (numeric columns are partitioned at numeric_threshold).
SplitCandidate conditional_entropy(const Table& features, std::string_view column,
                                   std::span<const int> target);
/// Same as conditional_entropy; named for the quantity callers usually want.
SplitCandidate information_gain(const Table& features, std::string_view column,
                                std::span<const int> target);

enum class TiePolicy { FirstInSchemaOrder, Random };

struct BestSplit {
  SplitCandidate best;
  /// Every candidate within 1e-9 of the best gain, in candidate order (includes best).
  std::vector<SplitCandidate> tied;
};

inline constexpr double kTieTolerance = 1e-9;
inline constexpr double kMinGain = 1e-12;

/// Highest-gain candidate, or nullopt when no candidate has positive gain.
/// `rng` is only consulted under TiePolicy::Random.
std::optional<BestSplit> best_split(const Table& features, std::span<const std::string> candidates,
                                    std::span<const int> target, TiePolicy tie_policy,
                                    Rng* rng = nullptr);

struct TreeParams {
  std::optional<std::size_t> max_depth;
  /// Nodes holding fewer rows than this become leaves.
  std::size_t min_samples_leaf = 1;
  /// Columns drawn (without replacement) per node; all columns when unset.
  std::optional<std::size_t> feature_subset_size;
  TiePolicy tie_policy = TiePolicy::FirstInSchemaOrder;
  std::uint64_t seed = 0;
};

struct FeatureSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  bool operator==(const FeatureSpec&) const = default;
};

struct TreeNode {
  enum class Kind { Leaf, Categorical, Numeric };

  Kind kind = Kind::Leaf;
  ClassCounts counts;
  int label = 0;
  std::size_t depth = 0;
  // Internal nodes only.
  std::size_t feature = 0;
  double gain = 0.0;
  double threshold = 0.0;
  std::vector<std::pair<std::string, std::size_t>> branches;  // category -> child
  std::size_t high = 0;                                        // >= threshold
  std::size_t low = 0;                                         // <  threshold

  bool operator==(const TreeNode&) const = default;
};

struct TreePrediction {
  int label = 0;
  ClassCounts counts;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<FeatureSpec> features, std::vector<TreeNode> nodes);

  const std::vector<FeatureSpec>& features() const noexcept { return features_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }

  /// `row` is aligned with features().
  TreePrediction predict(std::span<const Cell> row) const;
  /// Looks feature columns up by name, so `table` may carry extra columns.
  TreePrediction predict(const Table& table, std::size_t row) const;
  std::vector<int> predict_all(const Table& table) const;

  /// Per-feature sum of (rows at node / rows at root) x information gain.
  std::vector<double> impurity_decrease() const;

  std::size_t depth() const;
  std::size_t leaf_count() const;

  nlohmann::ordered_json to_json() const;
  static DecisionTree from_json(const nlohmann::ordered_json& doc);

  bool operator==(const DecisionTree&) const = default;

 private:
  std::size_t route(std::size_t node, const Cell& value) const;

  std::vector<FeatureSpec> features_;
  std::vector<TreeNode> nodes_;
};

/// ID3-style recursive construction: multiway categorical splits (each
/// categorical column tested at most once per path) and binary numeric splits
/// at the node-local mean.
DecisionTree build_tree(const Table& features, std::span<const int> target,
                        const TreeParams& params = {});

/// Builds using a caller-owned generator (the forest shares one per tree for
/// bootstrap and feature draws).
DecisionTree build_tree(const Table& features, std::span<const int> target, const TreeParams& params,
                        Rng& rng);

TreePrediction predict_tree(const DecisionTree& tree, std::span<const Cell> row);

}  // namespace attrition
