#include "attrition/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "attrition/errors.hpp"

namespace attrition {
namespace {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (true) {
    const auto bar = text.find('|', start);
    items.push_back(trim(text.substr(start, bar == std::string_view::npos ? std::string_view::npos
                                                                         : bar - start)));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return items;
}

std::optional<double> parse_double(std::string_view text) {
  const std::string cleaned = trim(text);
  if (cleaned.empty()) return std::nullopt;
  const char* begin = cleaned.data();
  const char* end = begin + cleaned.size();
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

// Splits one CSV record. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool any = false;
  char ch = 0;
  while (in.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

std::string quote_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  return kind == ColumnKind::Numeric ? "numeric" : "categorical";
}

std::string_view to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::Feature: return "feature";
    case ColumnRole::Identifier: return "identifier";
    case ColumnRole::Target: return "target";
  }
  return "feature";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "numeric") return ColumnKind::Numeric;
  if (text == "categorical") return ColumnKind::Categorical;
  throw SchemaError("unknown column kind '" + std::string(text) + "'");
}

ColumnRole parse_column_role(std::string_view text) {
  if (text == "feature") return ColumnRole::Feature;
  if (text == "identifier") return ColumnRole::Identifier;
  if (text == "target") return ColumnRole::Target;
  throw SchemaError("unknown column role '" + std::string(text) + "'");
}

void ColumnSchema::validate() const {
  if (name.empty()) throw SchemaError("column with empty name");
  if (kind == ColumnKind::Numeric && !declared_values.empty()) {
    throw SchemaError("numeric column '" + name + "' declares category values");
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& value : declared_values) {
    if (!seen.insert(value).second) {
      throw SchemaError("column '" + name + "' declares '" + value + "' twice");
    }
  }
}

TableSchema::TableSchema(std::vector<ColumnSchema> columns) : columns_(std::move(columns)) {
  std::unordered_set<std::string_view> names;
  std::size_t targets = 0;
  for (const auto& column : columns_) {
    column.validate();
    if (!names.insert(column.name).second) {
      throw SchemaError("duplicate column '" + column.name + "'");
    }
    if (column.role == ColumnRole::Target) ++targets;
  }
  for (const auto& column : columns_) {
    for (const auto& alias : column.aliases) {
      if (!names.insert(alias).second) {
        throw SchemaError("alias '" + alias + "' collides with another column or alias");
      }
    }
  }
  if (targets > 1) throw SchemaError("schema declares more than one target column");
}

std::optional<std::size_t> TableSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& aliases = columns_[i].aliases;
    if (std::find(aliases.begin(), aliases.end(), name) != aliases.end()) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> TableSchema::target_index() const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].role == ColumnRole::Target) return i;
  }
  return std::nullopt;
}

void TableSchema::require_single_target() const {
  if (!target_index()) throw SchemaError("schema has no target column");
}

TableSchema parse_schema(std::istream& in) {
  std::vector<ColumnSchema> columns;
  std::optional<std::vector<std::string>> null_tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (text.front() == '[') {
      if (text.back() != ']') {
        throw SchemaError("schema line " + std::to_string(line_no) + ": unterminated section");
      }
      ColumnSchema column;
      column.name = trim(std::string_view(text).substr(1, text.size() - 2));
      columns.push_back(std::move(column));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw SchemaError("schema line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (columns.empty()) {
      if (key != "null_tokens") {
        throw SchemaError("schema line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      }
      null_tokens = split_list(value);
      continue;
    }
    auto& column = columns.back();
    if (key == "kind") {
      column.kind = parse_column_kind(value);
    } else if (key == "role") {
      column.role = parse_column_role(value);
    } else if (key == "values") {
      column.declared_values = value.empty() ? std::vector<std::string>{} : split_list(value);
    } else if (key == "aliases") {
      column.aliases = value.empty() ? std::vector<std::string>{} : split_list(value);
    } else {
      throw SchemaError("schema line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  TableSchema schema(std::move(columns));
  schema.require_single_target();
  if (null_tokens) schema.null_tokens = *null_tokens;
  return schema;
}

TableSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file " + path.string());
  return parse_schema(in);
}

Column::Column(ColumnSchema schema, NumericCells cells)
    : schema_(std::move(schema)), cells_(std::move(cells)) {
  if (schema_.kind != ColumnKind::Numeric) {
    throw SchemaError("column '" + schema_.name + "' is categorical but holds numbers");
  }
  schema_.validate();
}

Column::Column(ColumnSchema schema, CategoricalCells cells)
    : schema_(std::move(schema)), cells_(std::move(cells)) {
  if (schema_.kind != ColumnKind::Categorical) {
    throw SchemaError("column '" + schema_.name + "' is numeric but holds categories");
  }
  schema_.validate();
}

std::size_t Column::size() const noexcept {
  return std::visit([](const auto& cells) { return cells.size(); }, cells_);
}

const Column::NumericCells& Column::numeric() const {
  if (const auto* cells = std::get_if<NumericCells>(&cells_)) return *cells;
  throw ModelError("column '" + name() + "' is not numeric");
}

const Column::CategoricalCells& Column::categorical() const {
  if (const auto* cells = std::get_if<CategoricalCells>(&cells_)) return *cells;
  throw ModelError("column '" + name() + "' is not categorical");
}

bool Column::is_missing(std::size_t row) const {
  return std::visit([row](const auto& cells) { return !cells.at(row).has_value(); }, cells_);
}

std::size_t Column::missing_count() const {
  return std::visit(
      [](const auto& cells) {
        return static_cast<std::size_t>(
            std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c; }));
      },
      cells_);
}

Cell Column::cell(std::size_t row) const {
  return std::visit(
      [row](const auto& cells) -> Cell {
        const auto& value = cells.at(row);
        if (!value) return std::monostate{};
        return *value;
      },
      cells_);
}

Column Column::select(std::span<const std::size_t> rows) const {
  return std::visit(
      [&](const auto& cells) {
        std::remove_cvref_t<decltype(cells)> picked;
        picked.reserve(rows.size());
        for (const auto r : rows) picked.push_back(cells.at(r));
        return Column(schema_, std::move(picked));
      },
      cells_);
}

Column Column::with_role(ColumnRole role) const {
  Column copy = *this;
  copy.schema_.role = role;
  return copy;
}

Table::Table(std::vector<Column> columns) : columns_(std::move(columns)) {
  n_rows_ = columns_.empty() ? 0 : columns_.front().size();
  std::unordered_set<std::string_view> names;
  std::size_t targets = 0;
  for (const auto& column : columns_) {
    if (column.size() != n_rows_) {
      throw SchemaError("column '" + column.name() + "' has " + std::to_string(column.size()) +
                        " cells, expected " + std::to_string(n_rows_));
    }
    if (!names.insert(column.name()).second) {
      throw SchemaError("duplicate column '" + column.name() + "'");
    }
    if (column.role() == ColumnRole::Target) ++targets;
    const auto& declared = column.schema().declared_values;
    if (column.kind() == ColumnKind::Categorical && !declared.empty()) {
      const std::unordered_set<std::string_view> allowed(declared.begin(), declared.end());
      const auto& cells = column.categorical();
      for (std::size_t r = 0; r < cells.size(); ++r) {
        if (cells[r] && !allowed.contains(*cells[r])) {
          throw ValidationError("column '" + column.name() + "' row " + std::to_string(r + 1) +
                                ": value '" + *cells[r] + "' is not a declared category");
        }
      }
    }
  }
  if (targets > 1) throw SchemaError("table has more than one target column");
}

const Column& Table::column(std::string_view name) const {
  if (const auto index = find(name)) return columns_[*index];
  throw SchemaError("no column named '" + std::string(name) + "'");
}

std::optional<std::size_t> Table::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name() == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Table::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& column : columns_) names.push_back(column.name());
  return names;
}

TableSchema Table::schema() const {
  std::vector<ColumnSchema> schemas;
  schemas.reserve(columns_.size());
  for (const auto& column : columns_) schemas.push_back(column.schema());
  return TableSchema(std::move(schemas));
}

std::vector<Cell> Table::row(std::size_t r) const {
  std::vector<Cell> cells;
  cells.reserve(columns_.size());
  for (const auto& column : columns_) cells.push_back(column.cell(r));
  return cells;
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
  std::vector<Column> picked;
  picked.reserve(columns_.size());
  for (const auto& column : columns_) picked.push_back(column.select(rows));
  Table out;
  out.columns_ = std::move(picked);
  out.n_rows_ = rows.size();
  return out;
}

Table Table::without_identifiers() const {
  std::vector<Column> kept;
  for (const auto& column : columns_) {
    if (column.role() != ColumnRole::Identifier) kept.push_back(column);
  }
  Table out;
  out.columns_ = std::move(kept);
  out.n_rows_ = n_rows_;
  return out;
}

Table read_csv(std::istream& in, const TableSchema& schema, const CsvOptions& options) {
  std::vector<std::string> header;
  if (!read_record(in, header)) throw SchemaError("CSV has no header row");
  for (auto& name : header) name = trim(name);
  if (!header.empty() && header.front().starts_with("\xEF\xBB\xBF")) {
    header.front().erase(0, 3);
  }

  // Map every schema column to its header position.
  std::vector<std::optional<std::size_t>> position(schema.size());
  std::vector<std::string> extra;
  for (std::size_t h = 0; h < header.size(); ++h) {
    const auto index = schema.find(header[h]);
    if (!index || position[*index]) {
      extra.push_back(header[h]);
      continue;
    }
    position[*index] = h;
  }
  std::vector<std::string> missing;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (!position[c]) missing.push_back(schema[c].name);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string message = "CSV header does not match schema;";
    auto append = [&](const char* label, const std::vector<std::string>& names) {
      if (names.empty()) return;
      message += std::string(" ") + label + ":";
      for (const auto& name : names) message += " " + name;
      message += ";";
    };
    append("missing columns", missing);
    append("extra columns", extra);
    message.pop_back();
    throw SchemaError(message);
  }

  const std::unordered_set<std::string> nulls(schema.null_tokens.begin(), schema.null_tokens.end());
  std::vector<Column::NumericCells> numbers(schema.size());
  std::vector<Column::CategoricalCells> categories(schema.size());
  std::vector<std::unordered_set<std::string_view>> allowed(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& declared = schema[c].declared_values;
    allowed[c].insert(declared.begin(), declared.end());
  }

  std::vector<std::string> fields;
  std::size_t row = 0;
  while (read_record(in, fields)) {
    if (fields.size() == 1 && trim(fields.front()).empty() && header.size() > 1) continue;
    ++row;
    if (fields.size() != header.size()) {
      throw ParseError("CSV row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                           " fields, header has " + std::to_string(header.size()),
                       row, "");
    }
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto& column = schema[c];
      std::string text = trim(fields[*position[c]]);
      const bool null = nulls.contains(text);
      if (column.kind == ColumnKind::Numeric) {
        if (null) {
          numbers[c].emplace_back();
          continue;
        }
        const auto value = parse_double(text);
        if (!value) {
          throw ParseError("row " + std::to_string(row) + ", column '" + column.name +
                               "': cannot parse '" + text + "' as a number",
                           row, column.name);
        }
        numbers[c].emplace_back(*value);
      } else {
        if (null) {
          categories[c].emplace_back();
          continue;
        }
        if (!allowed[c].empty() && !allowed[c].contains(text)) {
          if (options.lenient) {
            categories[c].emplace_back();
            continue;
          }
          throw ValidationError("row " + std::to_string(row) + ", column '" + column.name +
                                "': value '" + text + "' is not a declared category");
        }
        categories[c].emplace_back(std::move(text));
      }
    }
  }

  std::vector<Column> columns;
  columns.reserve(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema[c].kind == ColumnKind::Numeric) {
      columns.emplace_back(schema[c], std::move(numbers[c]));
    } else {
      columns.emplace_back(schema[c], std::move(categories[c]));
    }
  }
  return Table(std::move(columns));
}

Table load_csv(const std::filesystem::path& path, const TableSchema& schema,
               const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file " + path.string());
  return read_csv(in, schema, options);
}

std::string format_number(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

void write_csv(const Table& table, std::ostream& out) {
  const auto& columns = table.columns();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out << ',';
    out << quote_field(columns[c].name());
  }
  out << '\n';
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ',';
      const Cell cell = columns[c].cell(r);
      if (const auto* number = std::get_if<double>(&cell)) {
        out << format_number(*number);
      } else if (const auto* text = std::get_if<std::string>(&cell)) {
        out << quote_field(*text);
      }
    }
    out << '\n';
  }
}

void save_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(table, out);
}

std::vector<std::pair<std::string, std::size_t>> missing_counts(const Table& table) {
  std::vector<std::pair<std::string, std::size_t>> counts;
  counts.reserve(table.n_cols());
  for (const auto& column : table.columns()) counts.emplace_back(column.name(), column.missing_count());
  return counts;
}

SplitData split_columns(const Table& table) {
  std::optional<std::size_t> target_index;
  std::vector<Column> features;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    const auto& column = table.column(c);
    if (column.role() == ColumnRole::Target) {
      target_index = c;
    } else if (column.role() == ColumnRole::Feature) {
      features.push_back(column);
    }
  }
  if (!target_index) throw SchemaError("table has no target column");
  if (features.empty()) throw SchemaError("table has no feature columns");

  const auto& target_column = table.column(*target_index);
  Labels target;
  target.reserve(table.n_rows());
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    const Cell cell = target_column.cell(r);
    if (is_missing(cell)) {
      throw ValidationError("target '" + target_column.name() + "' is missing at row " +
                            std::to_string(r + 1));
    }
    int label = -1;
    if (const auto* number = std::get_if<double>(&cell)) {
      if (*number == 0.0) label = 0;
      if (*number == 1.0) label = 1;
    } else {
      const auto& text = std::get<std::string>(cell);
      if (text == "0") label = 0;
      if (text == "1") label = 1;
    }
    if (label < 0) {
      throw ValidationError("target '" + target_column.name() + "' at row " +
                            std::to_string(r + 1) + " is not 0 or 1");
    }
    target.push_back(label);
  }

  SplitData out{Table(std::move(features)), std::move(target)};
  return out;
}

}  // namespace attrition
