#include "attrition/dtree.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "attrition/errors.hpp"

namespace attrition {
namespace {

// Column storage the builder scans at every node: doubles or dense category codes.
struct EncodedColumn {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  std::vector<double> values;
  std::vector<std::uint32_t> codes;
  std::vector<std::string> categories;
};

std::vector<EncodedColumn> encode_features(const Table& features) {
  std::vector<EncodedColumn> encoded;
  encoded.reserve(features.n_cols());
  for (const auto& column : features.columns()) {
    EncodedColumn out;
    out.name = column.name();
    out.kind = column.kind();
    if (column.kind() == ColumnKind::Numeric) {
      const auto& cells = column.numeric();
      out.values.reserve(cells.size());
      for (std::size_t r = 0; r < cells.size(); ++r) {
        if (!cells[r]) {
          throw DataError("column '" + column.name() + "' row " + std::to_string(r + 1) +
                          " is missing; trees need complete data");
        }
        out.values.push_back(*cells[r]);
      }
    } else {
      const auto& cells = column.categorical();
      std::set<std::string> observed;
      for (std::size_t r = 0; r < cells.size(); ++r) {
        if (!cells[r]) {
          throw DataError("column '" + column.name() + "' row " + std::to_string(r + 1) +
                          " is missing; trees need complete data");
        }
        observed.insert(*cells[r]);
      }
      // Declared order first so branches follow the schema, then anything undeclared.
      for (const auto& value : column.schema().declared_values) {
        if (observed.erase(value)) out.categories.push_back(value);
      }
      out.categories.insert(out.categories.end(), observed.begin(), observed.end());
      std::map<std::string_view, std::uint32_t> lookup;
      for (std::size_t i = 0; i < out.categories.size(); ++i) {
        lookup[out.categories[i]] = static_cast<std::uint32_t>(i);
      }
      out.codes.reserve(cells.size());
      for (const auto& cell : cells) out.codes.push_back(lookup.at(*cell));
    }
    encoded.push_back(std::move(out));
  }
  return encoded;
}

void check_target(std::size_t rows, std::span<const int> target) {
  if (target.size() != rows) {
    throw DataError("target has " + std::to_string(target.size()) + " labels for " +
                    std::to_string(rows) + " rows");
  }
  for (const int label : target) {
    if (label != 0 && label != 1) throw ValidationError("target labels must be 0 or 1");
  }
}

ClassCounts count_labels(std::span<const std::size_t> rows, std::span<const int> target) {
  ClassCounts counts;
  for (const auto r : rows) counts.add(target[r]);
  return counts;
}

struct NodeSplit {
  double conditional = 0.0;
  double gain = 0.0;
  double threshold = 0.0;
  bool degenerate = false;
  // Categorical: one entry per category code. Numeric: {high, low}.
  std::vector<ClassCounts> parts;
};

double weighted_entropy(const std::vector<ClassCounts>& parts, std::size_t n) {
  double sum = 0.0;
  for (const auto& part : parts) {
    if (part.total() == 0) continue;
    sum += static_cast<double>(part.total()) / static_cast<double>(n) * entropy(part);
  }
  return sum;
}

NodeSplit evaluate_split(const EncodedColumn& column, std::span<const std::size_t> rows,
                         std::span<const int> target, double parent_entropy) {
  NodeSplit split;
  if (column.kind == ColumnKind::Categorical) {
    split.parts.assign(column.categories.size(), ClassCounts{});
    for (const auto r : rows) split.parts[column.codes[r]].add(target[r]);
  } else {
    double sum = 0.0;
    for (const auto r : rows) sum += column.values[r];
    split.threshold = sum / static_cast<double>(rows.size());
    split.parts.assign(2, ClassCounts{});
    for (const auto r : rows) split.parts[column.values[r] >= split.threshold ? 0 : 1].add(target[r]);
    split.degenerate = split.parts[0].total() == 0 || split.parts[1].total() == 0;
  }
  split.conditional = weighted_entropy(split.parts, rows.size());
  split.gain = split.degenerate ? 0.0 : parent_entropy - split.conditional;
  return split;
}

SplitCandidate to_candidate(const EncodedColumn& column, const NodeSplit& split,
                            double parent_entropy) {
  SplitCandidate candidate;
  candidate.column = column.name;
  candidate.parent_entropy = parent_entropy;
  candidate.conditional_entropy = split.conditional;
  candidate.information_gain = split.gain;
  candidate.degenerate = split.degenerate;
  if (column.kind == ColumnKind::Categorical) {
    candidate.kind = SplitKind::CategoricalMultiway;
    for (std::size_t code = 0; code < split.parts.size(); ++code) {
      if (split.parts[code].total() > 0) {
        candidate.partitions.push_back({column.categories[code], split.parts[code]});
      }
    }
  } else {
    candidate.kind = SplitKind::NumericThreshold;
    candidate.threshold = split.threshold;
    const std::string theta = format_number(split.threshold);
    if (split.parts[0].total() > 0) candidate.partitions.push_back({">=" + theta, split.parts[0]});
    if (split.parts[1].total() > 0) candidate.partitions.push_back({"<" + theta, split.parts[1]});
  }
  return candidate;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

// Picks among tied indices per policy.
std::size_t break_tie(std::span<const std::size_t> tied, TiePolicy policy, Rng* rng) {
  if (policy == TiePolicy::Random && tied.size() > 1) {
    if (!rng) throw ModelError("random tie policy needs a generator");
    return tied[rng->index(tied.size())];
  }
  return tied.front();
}

std::string_view kind_name(TreeNode::Kind kind) {
  switch (kind) {
    case TreeNode::Kind::Leaf: return "leaf";
    case TreeNode::Kind::Categorical: return "categorical";
    case TreeNode::Kind::Numeric: return "numeric";
  }
  return "leaf";
}

}  // namespace

double entropy(std::span<const std::size_t> counts) {
  std::vector<std::size_t> sorted(counts.begin(), counts.end());
  // Fixed summation order makes the result exactly permutation-invariant.
  std::sort(sorted.begin(), sorted.end());
  const std::size_t total = std::accumulate(sorted.begin(), sorted.end(), std::size_t{0});
  if (total == 0) throw DataError("entropy of an empty node");
  double h = 0.0;
  for (const auto count : sorted) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h <= 0.0 ? 0.0 : h;
}

double entropy(const ClassCounts& counts) {
  const std::array<std::size_t, 2> values{counts.n0, counts.n1};
  return entropy(values);
}

double numeric_threshold(std::span<const double> values) {
  if (values.empty()) throw DataError("threshold of an empty node");
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

SplitCandidate conditional_entropy(const Table& features, std::string_view column,
                                   std::span<const int> target) {
  if (features.n_rows() == 0) throw DataError("conditional entropy of an empty table");
  check_target(features.n_rows(), target);
  const auto index = features.find(column);
  if (!index) throw SchemaError("no column named '" + std::string(column) + "'");
  const Table single({features.column(*index)});
  const auto encoded = encode_features(single);
  const auto rows = all_rows(features.n_rows());
  const double parent = entropy(count_labels(rows, target));
  return to_candidate(encoded.front(), evaluate_split(encoded.front(), rows, target, parent), parent);
}

SplitCandidate information_gain(const Table& features, std::string_view column,
                                std::span<const int> target) {
  return conditional_entropy(features, column, target);
}

std::optional<BestSplit> best_split(const Table& features, std::span<const std::string> candidates,
                                    std::span<const int> target, TiePolicy tie_policy, Rng* rng) {
  if (candidates.empty()) throw ModelError("best_split needs at least one candidate column");
  std::vector<SplitCandidate> evaluated;
  evaluated.reserve(candidates.size());
  for (const auto& name : candidates) evaluated.push_back(information_gain(features, name, target));

  double best_gain = -INFINITY;
  for (const auto& c : evaluated) best_gain = std::max(best_gain, c.information_gain);
  if (best_gain <= kMinGain) return std::nullopt;

  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < evaluated.size(); ++i) {
    if (best_gain - evaluated[i].information_gain <= kTieTolerance) tied.push_back(i);
  }
  BestSplit result;
  result.best = evaluated[break_tie(tied, tie_policy, rng)];
  for (const auto i : tied) result.tied.push_back(evaluated[i]);
  return result;
}

DecisionTree::DecisionTree(std::vector<FeatureSpec> features, std::vector<TreeNode> nodes)
    : features_(std::move(features)), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ModelError("a tree needs at least one node");
  for (const auto& node : nodes_) {
    if (node.kind != TreeNode::Kind::Leaf && node.feature >= features_.size()) {
      throw ModelError("tree node tests an unknown feature");
    }
  }
}

std::size_t DecisionTree::route(std::size_t node_index, const Cell& value) const {
  const auto& node = nodes_[node_index];
  const auto& feature = features_[node.feature];
  if (is_missing(value)) throw DataError("feature '" + feature.name + "' is missing");
  if (node.kind == TreeNode::Kind::Numeric) {
    const auto* number = std::get_if<double>(&value);
    if (!number) throw DataError("feature '" + feature.name + "' must be numeric");
    return *number >= node.threshold ? node.high : node.low;
  }
  const auto* category = std::get_if<std::string>(&value);
  if (!category) throw DataError("feature '" + feature.name + "' must be categorical");
  for (const auto& [name, child] : node.branches) {
    if (name == *category) return child;
  }
  // Unseen category: follow the child that saw the most training rows.
  std::size_t heaviest = node.branches.front().second;
  for (const auto& [name, child] : node.branches) {
    if (nodes_[child].counts.total() > nodes_[heaviest].counts.total()) heaviest = child;
  }
  return heaviest;
}

TreePrediction DecisionTree::predict(std::span<const Cell> row) const {
  if (row.size() != features_.size()) {
    throw DataError("row has " + std::to_string(row.size()) + " values, tree expects " +
                    std::to_string(features_.size()));
  }
  std::size_t node = 0;
  while (nodes_[node].kind != TreeNode::Kind::Leaf) node = route(node, row[nodes_[node].feature]);
  return {nodes_[node].label, nodes_[node].counts};
}

TreePrediction DecisionTree::predict(const Table& table, std::size_t row) const {
  std::size_t node = 0;
  while (nodes_[node].kind != TreeNode::Kind::Leaf) {
    const auto& feature = features_[nodes_[node].feature];
    node = route(node, table.column(feature.name).cell(row));
  }
  return {nodes_[node].label, nodes_[node].counts};
}

std::vector<int> DecisionTree::predict_all(const Table& table) const {
  std::vector<const Column*> columns;
  columns.reserve(features_.size());
  for (const auto& feature : features_) columns.push_back(&table.column(feature.name));
  std::vector<int> labels(table.n_rows());
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    std::size_t node = 0;
    while (nodes_[node].kind != TreeNode::Kind::Leaf) {
      const auto& current = nodes_[node];
      const Column& column = *columns[current.feature];
      if (current.kind == TreeNode::Kind::Numeric && column.kind() == ColumnKind::Numeric) {
        const auto& value = column.numeric()[r];
        if (!value) throw DataError("feature '" + column.name() + "' is missing");
        node = *value >= current.threshold ? current.high : current.low;
      } else {
        node = route(node, column.cell(r));
      }
    }
    labels[r] = nodes_[node].label;
  }
  return labels;
}

std::vector<double> DecisionTree::impurity_decrease() const {
  std::vector<double> weights(features_.size(), 0.0);
  const auto root_rows = static_cast<double>(nodes_.front().counts.total());
  if (root_rows == 0) return weights;
  for (const auto& node : nodes_) {
    if (node.kind == TreeNode::Kind::Leaf) continue;
    weights[node.feature] += static_cast<double>(node.counts.total()) / root_rows * node.gain;
  }
  return weights;
}

std::size_t DecisionTree::depth() const {
  std::size_t deepest = 0;
  for (const auto& node : nodes_) deepest = std::max(deepest, node.depth);
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) {
    return n.kind == TreeNode::Kind::Leaf;
  }));
}

nlohmann::ordered_json DecisionTree::to_json() const {
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (const auto& f : features_) features.push_back({{"name", f.name}, {"kind", to_string(f.kind)}});

  // Post-order build of the nested document without recursion.
  std::vector<nlohmann::ordered_json> built(nodes_.size());
  std::vector<std::pair<std::size_t, bool>> stack{{0, false}};
  while (!stack.empty()) {
    auto [index, expanded] = stack.back();
    stack.pop_back();
    const auto& node = nodes_[index];
    if (!expanded && node.kind != TreeNode::Kind::Leaf) {
      stack.emplace_back(index, true);
      if (node.kind == TreeNode::Kind::Numeric) {
        stack.emplace_back(node.high, false);
        stack.emplace_back(node.low, false);
      } else {
        for (const auto& branch : node.branches) stack.emplace_back(branch.second, false);
      }
      continue;
    }
    nlohmann::ordered_json doc;
    doc["type"] = kind_name(node.kind);
    if (node.kind != TreeNode::Kind::Leaf) {
      doc["column"] = features_[node.feature].name;
      doc["gain"] = node.gain;
    }
    doc["label"] = node.label;
    doc["counts"] = {node.counts.n0, node.counts.n1};
    if (node.kind == TreeNode::Kind::Numeric) {
      doc["threshold"] = node.threshold;
      doc["high"] = std::move(built[node.high]);
      doc["low"] = std::move(built[node.low]);
    } else if (node.kind == TreeNode::Kind::Categorical) {
      nlohmann::ordered_json branches = nlohmann::ordered_json::object();
      for (const auto& [category, child] : node.branches) branches[category] = std::move(built[child]);
      doc["branches"] = std::move(branches);
    }
    built[index] = std::move(doc);
  }
  nlohmann::ordered_json doc;
  doc["features"] = std::move(features);
  doc["root"] = std::move(built.front());
  return doc;
}

DecisionTree DecisionTree::from_json(const nlohmann::ordered_json& doc) {
  try {
    std::vector<FeatureSpec> features;
    for (const auto& f : doc.at("features")) {
      features.push_back({f.at("name").get<std::string>(), parse_column_kind(f.at("kind").get<std::string>())});
    }
    auto feature_index = [&](const std::string& name) {
      for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].name == name) return i;
      }
      throw DataError("tree node tests undeclared feature '" + name + "'");
    };

    std::vector<TreeNode> nodes;
    std::vector<std::pair<const nlohmann::ordered_json*, std::size_t>> pending{{&doc.at("root"), 0}};
    nodes.emplace_back();
    while (!pending.empty()) {
      auto [json, index] = pending.back();
      pending.pop_back();
      TreeNode node;
      node.depth = nodes[index].depth;
      const auto type = json->at("type").get<std::string>();
      node.label = json->at("label").get<int>();
      const auto counts = json->at("counts").get<std::vector<std::size_t>>();
      node.counts = {counts.at(0), counts.at(1)};
      if (type == "leaf") {
        node.kind = TreeNode::Kind::Leaf;
      } else {
        node.feature = feature_index(json->at("column").get<std::string>());
        node.gain = json->at("gain").get<double>();
        auto child = [&](const nlohmann::ordered_json& sub) {
          const std::size_t at = nodes.size();
          nodes.emplace_back();
          nodes.back().depth = node.depth + 1;
          pending.emplace_back(&sub, at);
          return at;
        };
        if (type == "numeric") {
          node.kind = TreeNode::Kind::Numeric;
          node.threshold = json->at("threshold").get<double>();
          node.high = child(json->at("high"));
          node.low = child(json->at("low"));
        } else if (type == "categorical") {
          node.kind = TreeNode::Kind::Categorical;
          for (const auto& [category, sub] : json->at("branches").items()) {
            node.branches.emplace_back(category, child(sub));
          }
        } else {
          throw DataError("unknown tree node type '" + type + "'");
        }
      }
      nodes[index] = std::move(node);
    }
    return DecisionTree(std::move(features), std::move(nodes));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed tree document: ") + e.what());
  }
}

DecisionTree build_tree(const Table& features, std::span<const int> target, const TreeParams& params) {
  Rng rng(params.seed);
  return build_tree(features, target, params, rng);
}

DecisionTree build_tree(const Table& features, std::span<const int> target, const TreeParams& params,
                        Rng& rng) {
  if (features.n_rows() == 0) throw DataError("cannot build a tree from an empty training set");
  if (features.n_cols() == 0) throw DataError("cannot build a tree without feature columns");
  check_target(features.n_rows(), target);
  if (params.feature_subset_size && *params.feature_subset_size == 0) {
    throw ConfigError("feature subset size must be at least 1");
  }

  const auto columns = encode_features(features);
  std::vector<FeatureSpec> specs;
  specs.reserve(columns.size());
  for (const auto& column : columns) specs.push_back({column.name, column.kind});

  struct Work {
    std::size_t node;
    std::vector<std::size_t> rows;
    std::vector<bool> used;  // categorical columns already tested on this path
  };

  std::vector<TreeNode> nodes(1);
  std::vector<Work> stack;
  stack.push_back({0, all_rows(features.n_rows()), std::vector<bool>(columns.size(), false)});
  std::vector<std::size_t> candidates;

  while (!stack.empty()) {
    Work work = std::move(stack.back());
    stack.pop_back();
    TreeNode& node = nodes[work.node];
    node.counts = count_labels(work.rows, target);
    node.label = node.counts.majority();
    node.kind = TreeNode::Kind::Leaf;

    const bool pure = node.counts.n0 == 0 || node.counts.n1 == 0;
    const bool depth_hit = params.max_depth && node.depth >= *params.max_depth;
    if (pure || depth_hit || work.rows.size() < params.min_samples_leaf) continue;

    candidates.clear();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (!work.used[c]) candidates.push_back(c);
    }
    if (candidates.empty()) continue;
    if (params.feature_subset_size && *params.feature_subset_size < candidates.size()) {
      const std::size_t k = *params.feature_subset_size;
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(candidates[i], candidates[i + rng.index(candidates.size() - i)]);
      }
      candidates.resize(k);
      std::sort(candidates.begin(), candidates.end());
    }

    const double parent = entropy(node.counts);
    std::vector<NodeSplit> splits;
    splits.reserve(candidates.size());
    double best_gain = -INFINITY;
    for (const auto c : candidates) {
      splits.push_back(evaluate_split(columns[c], work.rows, target, parent));
      best_gain = std::max(best_gain, splits.back().gain);
    }
    if (best_gain <= kMinGain) continue;

    std::vector<std::size_t> tied;
    for (std::size_t i = 0; i < splits.size(); ++i) {
      if (best_gain - splits[i].gain <= kTieTolerance) tied.push_back(i);
    }
    const std::size_t pick = break_tie(tied, params.tie_policy, &rng);
    const std::size_t feature = candidates[pick];
    const NodeSplit& split = splits[pick];
    const EncodedColumn& column = columns[feature];

    node.feature = feature;
    node.gain = split.gain;
    const std::size_t depth = node.depth;

    if (column.kind == ColumnKind::Categorical) {
      node.kind = TreeNode::Kind::Categorical;
      std::vector<std::vector<std::size_t>> groups(column.categories.size());
      for (const auto r : work.rows) groups[column.codes[r]].push_back(r);
      std::vector<bool> used = work.used;
      used[feature] = true;
      std::vector<Work> children;
      for (std::size_t code = 0; code < groups.size(); ++code) {
        if (groups[code].empty()) continue;
        const std::size_t child = nodes.size();
        nodes.emplace_back();
        nodes.back().depth = depth + 1;
        nodes[work.node].branches.emplace_back(column.categories[code], child);
        children.push_back({child, std::move(groups[code]), used});
      }
      // Reverse so the first branch is expanded first.
      for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(std::move(*it));
    } else {
      node.kind = TreeNode::Kind::Numeric;
      node.threshold = split.threshold;
      std::vector<std::size_t> high;
      std::vector<std::size_t> low;
      for (const auto r : work.rows) (column.values[r] >= split.threshold ? high : low).push_back(r);
      const std::size_t high_index = nodes.size();
      const std::size_t low_index = high_index + 1;
      nodes.emplace_back();
      nodes.emplace_back();
      nodes[work.node].high = high_index;
      nodes[work.node].low = low_index;
      nodes[high_index].depth = depth + 1;
      nodes[low_index].depth = depth + 1;
      stack.push_back({low_index, std::move(low), work.used});
      stack.push_back({high_index, std::move(high), std::move(work.used)});
    }
  }
  return DecisionTree(std::move(specs), std::move(nodes));
}

TreePrediction predict_tree(const DecisionTree& tree, std::span<const Cell> row) {
  return tree.predict(row);
}

}  // namespace attrition
