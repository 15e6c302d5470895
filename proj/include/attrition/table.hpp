#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace attrition {

enum class ColumnKind { Numeric, Categorical };
enum class ColumnRole { Feature, Identifier, Target };

std::string_view to_string(ColumnKind kind);
std::string_view to_string(ColumnRole role);
ColumnKind parse_column_kind(std::string_view text);
ColumnRole parse_column_role(std::string_view text);

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  /// Allowed categories in declaration order. Empty means unconstrained.
  std::vector<std::string> declared_values;
  ColumnRole role = ColumnRole::Feature;
  /// Alternative header spellings accepted by load_csv.
  std::vector<std::string> aliases;

  /// Throws SchemaError on duplicate declared values or values on a numeric column.
  void validate() const;

  bool operator==(const ColumnSchema&) const = default;
};

/// Ordered column declarations for a dataset. A dataset schema has exactly
/// one target column; derived tables (e.g. features after split) may have none.
class TableSchema {
 public:
  TableSchema() = default;
  explicit TableSchema(std::vector<ColumnSchema> columns);

  const std::vector<ColumnSchema>& columns() const noexcept { return columns_; }
  std::size_t size() const noexcept { return columns_.size(); }
  const ColumnSchema& operator[](std::size_t i) const { return columns_[i]; }

  /// Index of the column named `name`, or of the column listing it as an alias.
  std::optional<std::size_t> find(std::string_view name) const;
  std::optional<std::size_t> target_index() const;

  /// Throws SchemaError unless exactly one column has role=target.
  void require_single_target() const;

  /// Cell tokens that load as Missing.
  std::vector<std::string> null_tokens{"", "NaN"};

 private:
  std::vector<ColumnSchema> columns_;
};

/// Parses the key/value schema document:
///
///   null_tokens = | NaN
///   [enrollee_id]
///   kind = numeric
///   role = identifier
///   [gender]
///   kind = categorical
///   values = Male | Female | Other
///   aliases = Gender
///
/// Sections are columns in table order. List values are '|'-separated.
TableSchema parse_schema(std::istream& in);
TableSchema load_schema(const std::filesystem::path& path);

/// A single cell: Missing, a number, or a category.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& cell) { return std::holds_alternative<std::monostate>(cell); }

class Column {
 public:
  using NumericCells = std::vector<std::optional<double>>;
  using CategoricalCells = std::vector<std::optional<std::string>>;

  Column(ColumnSchema schema, NumericCells cells);
  Column(ColumnSchema schema, CategoricalCells cells);

  const ColumnSchema& schema() const noexcept { return schema_; }
  const std::string& name() const noexcept { return schema_.name; }
  ColumnKind kind() const noexcept { return schema_.kind; }
  ColumnRole role() const noexcept { return schema_.role; }
  std::size_t size() const noexcept;

  /// Throw ModelError when the column is of the other kind.
  const NumericCells& numeric() const;
  const CategoricalCells& categorical() const;

  bool is_missing(std::size_t row) const;
  std::size_t missing_count() const;
  Cell cell(std::size_t row) const;

  Column select(std::span<const std::size_t> rows) const;
  Column with_role(ColumnRole role) const;

  bool operator==(const Column&) const = default;

 private:
  ColumnSchema schema_;
  std::variant<NumericCells, CategoricalCells> cells_;
};

/// Column-major, immutable dataset.
class Table {
 public:
  Table() = default;
  /// Validates equal column lengths, unique names, at most one target and
  /// categorical membership in declared_values.
  explicit Table(std::vector<Column> columns);

  std::size_t n_rows() const noexcept { return n_rows_; }
  std::size_t n_cols() const noexcept { return columns_.size(); }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  /// Throws SchemaError when absent.
  const Column& column(std::string_view name) const;
  std::optional<std::size_t> find(std::string_view name) const;
  std::vector<std::string> column_names() const;
  TableSchema schema() const;

  std::vector<Cell> row(std::size_t r) const;

  /// Rows in the given order; indices may repeat.
  Table select_rows(std::span<const std::size_t> rows) const;
  /// Drops identifier-role columns.
  Table without_identifiers() const;

  bool operator==(const Table&) const = default;

 private:
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

struct CsvOptions {
  /// Categorical values outside declared_values load as Missing instead of failing.
  bool lenient = false;
};

/// Reads a header + rows CSV (RFC 4180 quoting, LF or CRLF). Columns are
/// returned in schema order regardless of header order.
Table read_csv(std::istream& in, const TableSchema& schema, const CsvOptions& options = {});
Table load_csv(const std::filesystem::path& path, const TableSchema& schema,
               const CsvOptions& options = {});

/// Missing cells are written as empty fields; numbers use shortest round-trip form.
void write_csv(const Table& table, std::ostream& out);
void save_csv(const Table& table, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

std::vector<std::pair<std::string, std::size_t>> missing_counts(const Table& table);

/// Binary class labels aligned with table rows.
using Labels = std::vector<int>;

struct SplitData {
  Table features;
  Labels target;
};

/// Separates the target column (which must hold only present 0/1 values)
/// from the feature columns; identifier columns are dropped.
SplitData split_columns(const Table& table);

}  // namespace attrition
