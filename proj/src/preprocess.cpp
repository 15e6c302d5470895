#include "attrition/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "attrition/errors.hpp"

namespace attrition {
namespace {

bool is_target(const Column& column) { return column.role() == ColumnRole::Target; }

template <typename Entry>
const Entry* find_entry(const std::vector<Entry>& entries, std::string_view column) {
  for (const auto& entry : entries) {
    if (entry.column == column) return &entry;
  }
  return nullptr;
}

const EncodingMap* find_map(const std::vector<EncodingMap>& maps, std::string_view column) {
  for (const auto& map : maps) {
    if (map.column == column) return &map;
  }
  return nullptr;
}

ColumnSchema numeric_schema(std::string name, ColumnRole role) {
  ColumnSchema schema;
  schema.name = std::move(name);
  schema.kind = ColumnKind::Numeric;
  schema.role = role;
  return schema;
}

}  // namespace

std::string_view to_string(OrderPolicy policy) {
  return policy == OrderPolicy::Alphabetical ? "alphabetical" : "schema_order";
}

std::string_view to_string(EncodingKind kind) {
  return kind == EncodingKind::Label ? "label" : "one_hot";
}

OrderPolicy parse_order_policy(std::string_view text) {
  if (text == "alphabetical") return OrderPolicy::Alphabetical;
  if (text == "schema_order") return OrderPolicy::SchemaOrder;
  throw ConfigError("unknown encoding policy '" + std::string(text) +
                    "' (expected alphabetical or schema_order)");
}

std::optional<std::size_t> EncodingMap::code(std::string_view category) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == category) return i;
  }
  return std::nullopt;
}

std::vector<std::string> EncodingMap::output_columns() const {
  if (kind == EncodingKind::Label) return {column};
  std::vector<std::string> names;
  names.reserve(categories.size());
  for (const auto& category : categories) names.push_back(column + "=" + category);
  return names;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty sequence");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

ImputeStats fit_impute(const Table& table) {
  ImputeStats stats;
  for (const auto& column : table.columns()) {
    if (is_target(column)) continue;
    if (column.kind() == ColumnKind::Numeric) {
      std::vector<double> present;
      for (const auto& cell : column.numeric()) {
        if (cell) present.push_back(*cell);
      }
      if (present.empty()) {
        throw DataError("cannot impute column '" + column.name() + "': every cell is missing");
      }
      stats.push_back({column.name(), median(std::move(present))});
    } else {
      std::map<std::string, std::size_t> counts;
      for (const auto& cell : column.categorical()) {
        if (cell) ++counts[*cell];
      }
      if (counts.empty()) {
        throw DataError("cannot impute column '" + column.name() + "': every cell is missing");
      }
      // std::map iterates in lexicographic order, so strict '>' keeps the smallest tie.
      auto best = counts.begin();
      for (auto it = counts.begin(); it != counts.end(); ++it) {
        if (it->second > best->second) best = it;
      }
      stats.push_back({column.name(), best->first});
    }
  }
  return stats;
}

Table apply_impute(const Table& table, const ImputeStats& stats) {
  std::vector<Column> columns;
  columns.reserve(table.n_cols());
  for (const auto& column : table.columns()) {
    if (is_target(column)) {
      columns.push_back(column);
      continue;
    }
    const auto* entry = find_entry(stats, column.name());
    if (!entry) {
      throw DataError("imputation statistics do not cover column '" + column.name() + "'");
    }
    if (column.kind() == ColumnKind::Numeric) {
      const auto* fill = std::get_if<double>(&entry->value);
      if (!fill) throw DataError("column '" + column.name() + "' has a categorical fill value");
      auto cells = column.numeric();
      for (auto& cell : cells) {
        if (!cell) cell = *fill;
      }
      columns.emplace_back(column.schema(), std::move(cells));
    } else {
      const auto* fill = std::get_if<std::string>(&entry->value);
      if (!fill) throw DataError("column '" + column.name() + "' has a numeric fill value");
      auto cells = column.categorical();
      for (auto& cell : cells) {
        if (!cell) cell = *fill;
      }
      columns.emplace_back(column.schema(), std::move(cells));
    }
  }
  return Table(std::move(columns));
}

EncodingMap fit_encoding(const Column& column, OrderPolicy policy, std::size_t one_hot_threshold) {
  const auto& cells = column.categorical();
  std::set<std::string> distinct;
  for (const auto& cell : cells) {
    if (cell) distinct.insert(*cell);
  }
  if (distinct.empty()) {
    throw DataError("cannot encode column '" + column.name() + "': no categories present");
  }

  EncodingMap map;
  map.column = column.name();
  map.order_policy = policy;
  map.kind = distinct.size() <= one_hot_threshold ? EncodingKind::Label : EncodingKind::OneHot;

  const auto& declared = column.schema().declared_values;
  if (policy == OrderPolicy::SchemaOrder && !declared.empty()) {
    for (const auto& value : declared) {
      if (distinct.contains(value)) map.categories.push_back(value);
    }
  } else {
    map.categories.assign(distinct.begin(), distinct.end());
  }
  return map;
}

Table apply_encoding(const Table& table, const std::vector<EncodingMap>& maps) {
  std::vector<Column> columns;
  for (const auto& column : table.columns()) {
    if (column.kind() == ColumnKind::Numeric) {
      columns.push_back(column);
      continue;
    }
    if (is_target(column)) {
      throw DataError("target column '" + column.name() + "' must be numeric");
    }
    const auto* map = find_map(maps, column.name());
    if (!map) throw DataError("no encoding fitted for column '" + column.name() + "'");

    const auto& cells = column.categorical();
    std::vector<std::size_t> codes(cells.size());
    for (std::size_t r = 0; r < cells.size(); ++r) {
      if (!cells[r]) {
        throw DataError("column '" + column.name() + "' row " + std::to_string(r + 1) +
                        " is missing; impute before encoding");
      }
      const auto code = map->code(*cells[r]);
      if (!code) {
        throw DataError("unseen category '" + *cells[r] + "' in column '" + column.name() + "'");
      }
      codes[r] = *code;
    }

    if (map->kind == EncodingKind::Label) {
      Column::NumericCells encoded(codes.begin(), codes.end());
      columns.emplace_back(numeric_schema(column.name(), column.role()), std::move(encoded));
    } else {
      const auto names = map->output_columns();
      for (std::size_t k = 0; k < names.size(); ++k) {
        Column::NumericCells indicator(codes.size());
        for (std::size_t r = 0; r < codes.size(); ++r) indicator[r] = codes[r] == k ? 1.0 : 0.0;
        columns.emplace_back(numeric_schema(names[k], column.role()), std::move(indicator));
      }
    }
  }
  return Table(std::move(columns));
}

Column decode_label(const Column& encoded, const EncodingMap& map) {
  if (map.kind != EncodingKind::Label) {
    throw ModelError("column '" + map.column + "' is not label encoded");
  }
  Column::CategoricalCells cells;
  cells.reserve(encoded.size());
  for (const auto& cell : encoded.numeric()) {
    if (!cell) {
      cells.emplace_back();
      continue;
    }
    const double code = *cell;
    if (code < 0 || code != std::floor(code) || code >= static_cast<double>(map.categories.size())) {
      throw DataError("code " + format_number(code) + " is outside the encoding of '" +
                      map.column + "'");
    }
    cells.emplace_back(map.decode(static_cast<std::size_t>(code)));
  }
  ColumnSchema schema;
  schema.name = map.column;
  schema.kind = ColumnKind::Categorical;
  schema.role = encoded.role();
  return Column(std::move(schema), std::move(cells));
}

ScaleFactors fit_scale(const Table& table) {
  ScaleFactors factors;
  for (const auto& column : table.columns()) {
    if (is_target(column)) continue;
    double max_abs = 0.0;
    for (const auto& cell : column.numeric()) {
      if (cell) max_abs = std::max(max_abs, std::abs(*cell));
    }
    factors.push_back({column.name(), max_abs > 0.0 ? max_abs : 1.0});
  }
  return factors;
}

Table apply_scale(const Table& table, const ScaleFactors& factors) {
  std::vector<Column> columns;
  columns.reserve(table.n_cols());
  for (const auto& column : table.columns()) {
    if (is_target(column)) {
      columns.push_back(column);
      continue;
    }
    const auto* entry = find_entry(factors, column.name());
    if (!entry) throw DataError("no scale factor for column '" + column.name() + "'");
    auto cells = column.numeric();
    for (auto& cell : cells) {
      if (cell) *cell /= entry->factor;
    }
    columns.emplace_back(column.schema(), std::move(cells));
  }
  return Table(std::move(columns));
}

FittedPreprocessor FittedPreprocessor::fit(const Table& table, const PreprocessOptions& options,
                                           const StageCallback& on_stage) {
  FittedPreprocessor fitted;
  fitted.options_ = options;

  fitted.impute_ = fit_impute(table);
  const Table imputed = apply_impute(table, fitted.impute_);
  if (on_stage) on_stage("impute");

  for (const auto& column : imputed.columns()) {
    if (column.kind() == ColumnKind::Categorical && !is_target(column)) {
      fitted.encodings_.push_back(
          fit_encoding(column, options.order_policy, options.one_hot_threshold));
    }
  }
  const Table encoded = apply_encoding(imputed, fitted.encodings_);
  if (on_stage) on_stage("encode");

  fitted.scale_ = fit_scale(encoded);
  if (on_stage) on_stage("scale");
  return fitted;
}

Table FittedPreprocessor::transform(const Table& table) const {
  return apply_scale(apply_encoding(apply_impute(table, impute_), encodings_), scale_);
}

nlohmann::ordered_json FittedPreprocessor::to_json() const {
  nlohmann::ordered_json doc;
  doc["options"] = {{"order_policy", to_string(options_.order_policy)},
                    {"one_hot_threshold", options_.one_hot_threshold}};
  auto impute = nlohmann::ordered_json::array();
  for (const auto& entry : impute_) {
    nlohmann::ordered_json item;
    item["column"] = entry.column;
    if (const auto* number = std::get_if<double>(&entry.value)) {
      item["strategy"] = "median";
      item["value"] = *number;
    } else {
      item["strategy"] = "mode";
      item["value"] = std::get<std::string>(entry.value);
    }
    impute.push_back(std::move(item));
  }
  doc["impute"] = std::move(impute);

  auto encodings = nlohmann::ordered_json::array();
  for (const auto& map : encodings_) {
    encodings.push_back({{"column", map.column},
                         {"kind", to_string(map.kind)},
                         {"order_policy", to_string(map.order_policy)},
                         {"categories", map.categories}});
  }
  doc["encodings"] = std::move(encodings);

  auto scale = nlohmann::ordered_json::array();
  for (const auto& entry : scale_) scale.push_back({{"column", entry.column}, {"factor", entry.factor}});
  doc["scale"] = std::move(scale);
  return doc;
}

FittedPreprocessor FittedPreprocessor::from_json(const nlohmann::ordered_json& doc) {
  FittedPreprocessor fitted;
  try {
    const auto& options = doc.at("options");
    fitted.options_.order_policy = parse_order_policy(options.at("order_policy").get<std::string>());
    fitted.options_.one_hot_threshold = options.at("one_hot_threshold").get<std::size_t>();
    for (const auto& item : doc.at("impute")) {
      ImputeEntry entry;
      entry.column = item.at("column").get<std::string>();
      if (item.at("strategy").get<std::string>() == "median") {
        entry.value = item.at("value").get<double>();
      } else {
        entry.value = item.at("value").get<std::string>();
      }
      fitted.impute_.push_back(std::move(entry));
    }
    for (const auto& item : doc.at("encodings")) {
      EncodingMap map;
      map.column = item.at("column").get<std::string>();
      map.kind = item.at("kind").get<std::string>() == "label" ? EncodingKind::Label
                                                                : EncodingKind::OneHot;
      map.order_policy = parse_order_policy(item.at("order_policy").get<std::string>());
      map.categories = item.at("categories").get<std::vector<std::string>>();
      fitted.encodings_.push_back(std::move(map));
    }
    for (const auto& item : doc.at("scale")) {
      fitted.scale_.push_back({item.at("column").get<std::string>(), item.at("factor").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed preprocessor document: ") + e.what());
  }
  return fitted;
}

}  // namespace attrition
