#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "attrition/table.hpp"
#include "json.hpp"

namespace attrition {

enum class OrderPolicy { Alphabetical, SchemaOrder };
enum class EncodingKind { Label, OneHot };

std::string_view to_string(OrderPolicy policy);
std::string_view to_string(EncodingKind kind);
OrderPolicy parse_order_policy(std::string_view text);

/// Category layout for one column. For label encoding a category's position
/// is its integer code; for one-hot it is the indicator column index.
struct EncodingMap {
  std::string column;
  EncodingKind kind = EncodingKind::Label;
  OrderPolicy order_policy = OrderPolicy::Alphabetical;
  std::vector<std::string> categories;

  std::optional<std::size_t> code(std::string_view category) const;
  const std::string& decode(std::size_t code) const { return categories.at(code); }
  /// Names of the generated columns: the column itself, or "<col>=<category>" per indicator.
  std::vector<std::string> output_columns() const;

  bool operator==(const EncodingMap&) const = default;
};

struct ImputeEntry {
  std::string column;
  /// Median for numeric columns, mode for categorical ones.
  std::variant<double, std::string> value;

  bool operator==(const ImputeEntry&) const = default;
};
using ImputeStats = std::vector<ImputeEntry>;

struct ScaleFactor {
  std::string column;
  double factor = 1.0;

  bool operator==(const ScaleFactor&) const = default;
};
using ScaleFactors = std::vector<ScaleFactor>;

/// Median / mode of every non-target column. Ties in the mode resolve to the
/// lexicographically smallest category; an even-sized median averages the middle pair.
ImputeStats fit_impute(const Table& table);
/// Fills Missing cells of every non-target column; target cells are left untouched.
Table apply_impute(const Table& table, const ImputeStats& stats);

double median(std::vector<double> values);

EncodingMap fit_encoding(const Column& column, OrderPolicy policy, std::size_t one_hot_threshold);
/// Encodes every categorical non-target column. The result is all-numeric.
Table apply_encoding(const Table& table, const std::vector<EncodingMap>& maps);
/// Inverse of a label encoding.
Column decode_label(const Column& encoded, const EncodingMap& map);

/// Max-absolute value of every numeric non-target column (1 when that is 0).
ScaleFactors fit_scale(const Table& table);
Table apply_scale(const Table& table, const ScaleFactors& factors);

struct PreprocessOptions {
  OrderPolicy order_policy = OrderPolicy::Alphabetical;
  std::size_t one_hot_threshold = 5;
};

/// Impute -> encode -> scale, fitted once and replayable on unseen rows.
class FittedPreprocessor {
 public:
  using StageCallback = std::function<void(std::string_view stage)>;

  static FittedPreprocessor fit(const Table& table, const PreprocessOptions& options,
                                const StageCallback& on_stage = {});

  Table transform(const Table& table) const;

  const PreprocessOptions& options() const noexcept { return options_; }
  const ImputeStats& impute_stats() const noexcept { return impute_; }
  const std::vector<EncodingMap>& encodings() const noexcept { return encodings_; }
  const ScaleFactors& scale_factors() const noexcept { return scale_; }

  nlohmann::ordered_json to_json() const;
  static FittedPreprocessor from_json(const nlohmann::ordered_json& doc);

  bool operator==(const FittedPreprocessor& other) const {
    return options_.order_policy == other.options_.order_policy &&
           options_.one_hot_threshold == other.options_.one_hot_threshold &&
           impute_ == other.impute_ && encodings_ == other.encodings_ && scale_ == other.scale_;
  }

 private:
  PreprocessOptions options_;
  ImputeStats impute_;
  std::vector<EncodingMap> encodings_;
  ScaleFactors scale_;
};

}  // namespace attrition
