#include "attrition/eda.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace attrition {
namespace {

void add(TargetCounts& counts, int label) {
  if (label == 1) {
    ++counts.target1;
  } else {
    ++counts.target0;
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  return out + "\"";
}

}  // namespace

const TargetCounts& CategoricalDistribution::at(std::string_view category) const {
  for (const auto& [name, counts] : categories) {
    if (name == category) return counts;
  }
  throw DataError("category '" + std::string(category) + "' not in distribution of '" + column + "'");
}

std::optional<double> CorrelationMatrix::at(std::string_view a, std::string_view b) const {
  const auto ia = std::find(labels.begin(), labels.end(), a);
  const auto ib = std::find(labels.begin(), labels.end(), b);
  if (ia == labels.end() || ib == labels.end()) {
    throw DataError("correlation matrix has no entry for (" + std::string(a) + ", " +
                    std::string(b) + ")");
  }
  return values[static_cast<std::size_t>(ia - labels.begin())]
               [static_cast<std::size_t>(ib - labels.begin())];
}

Labels target_labels(const Table& table) {
  const auto target = table.schema().target_index();
  if (!target) throw SchemaError("table has no target column");
  const auto& column = table.column(*target);
  Labels labels;
  labels.reserve(table.n_rows());
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    const Cell cell = column.cell(r);
    const auto* number = std::get_if<double>(&cell);
    if (!number || (*number != 0.0 && *number != 1.0)) {
      throw ValidationError("target '" + column.name() + "' at row " + std::to_string(r + 1) +
                            " is not 0 or 1");
    }
    labels.push_back(*number == 1.0 ? 1 : 0);
  }
  return labels;
}

CategoricalDistribution categorical_distribution(const Table& table, std::string_view name) {
  const auto& column = table.column(name);
  if (column.kind() != ColumnKind::Categorical) {
    throw DataError("column '" + column.name() + "' is numeric; expected categorical");
  }
  const Labels labels = target_labels(table);

  std::map<std::string, TargetCounts> counts;
  CategoricalDistribution dist;
  dist.column = column.name();
  const auto& cells = column.categorical();
  for (std::size_t r = 0; r < cells.size(); ++r) {
    if (cells[r]) {
      add(counts[*cells[r]], labels[r]);
    } else {
      add(dist.missing, labels[r]);
    }
  }
  for (const auto& value : column.schema().declared_values) {
    const auto it = counts.find(value);
    dist.categories.emplace_back(value, it == counts.end() ? TargetCounts{} : it->second);
    if (it != counts.end()) counts.erase(it);
  }
  for (const auto& [value, tally] : counts) dist.categories.emplace_back(value, tally);
  return dist;
}

NumericDistribution numeric_distribution(const Table& table, std::string_view name,
                                         std::size_t n_bins) {
  const auto& column = table.column(name);
  if (column.kind() != ColumnKind::Numeric) {
    throw DataError("column '" + column.name() + "' is categorical; expected numeric");
  }
  if (n_bins == 0) throw ConfigError("histogram needs at least one bin");
  const Labels labels = target_labels(table);

  NumericDistribution dist;
  dist.column = column.name();
  const auto& cells = column.numeric();
  double lo = INFINITY;
  double hi = -INFINITY;
  for (const auto& cell : cells) {
    if (!cell) continue;
    lo = std::min(lo, *cell);
    hi = std::max(hi, *cell);
  }
  if (lo > hi) throw DataError("column '" + column.name() + "' has no present values");

  if (lo == hi) {
    dist.edges = {lo, hi};
    dist.bins.resize(1);
  } else {
    const double width = (hi - lo) / static_cast<double>(n_bins);
    dist.edges.resize(n_bins + 1);
    for (std::size_t i = 0; i < n_bins; ++i) dist.edges[i] = lo + width * static_cast<double>(i);
    dist.edges[n_bins] = hi;
    dist.bins.resize(n_bins);
  }

  const std::size_t last = dist.bins.size() - 1;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    if (!cells[r]) {
      add(dist.missing, labels[r]);
      continue;
    }
    // upper_bound over the interior edges: a value equal to an edge opens the next bin.
    const auto interior_end = dist.edges.end() - 1;
    const auto it = std::upper_bound(dist.edges.begin() + 1, interior_end, *cells[r]);
    const auto bin = std::min(static_cast<std::size_t>(it - (dist.edges.begin() + 1)), last);
    add(dist.bins[bin], labels[r]);
  }
  return dist;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: sequences differ in length");
  if (x.size() < 2) throw DataError("pearson: need at least two observations");
  const auto n = static_cast<double>(x.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(const Table& table, std::vector<std::string> columns) {
  if (columns.empty()) {
    for (const auto& column : table.columns()) {
      if (column.kind() == ColumnKind::Numeric) columns.push_back(column.name());
    }
  }
  std::vector<const Column::NumericCells*> cells;
  for (const auto& name : columns) cells.push_back(&table.column(name).numeric());

  CorrelationMatrix matrix;
  matrix.labels = columns;
  const std::size_t k = columns.size();
  matrix.values.assign(k, std::vector<std::optional<double>>(k));
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      x.clear();
      y.clear();
      for (std::size_t r = 0; r < table.n_rows(); ++r) {
        const auto& va = (*cells[a])[r];
        const auto& vb = (*cells[b])[r];
        if (va && vb) {
          x.push_back(*va);
          y.push_back(*vb);
        }
      }
      std::optional<double> value;
      try {
        const double r = pearson(x, y);
        // A non-constant column correlates with itself at exactly 1.
        value = a == b ? 1.0 : r;
      } catch (const DataError&) {
        value.reset();
      }
      matrix.values[a][b] = value;
      matrix.values[b][a] = value;
    }
  }
  return matrix;
}

EdaReport run_eda(const Table& table, std::size_t n_bins) {
  EdaReport report;
  const auto target = table.schema().target_index();
  if (!target) throw SchemaError("table has no target column");
  report.target = table.column(*target).name();
  for (const auto& column : table.columns()) {
    if (column.role() == ColumnRole::Target) continue;
    if (column.kind() == ColumnKind::Categorical) {
      report.categorical.push_back(categorical_distribution(table, column.name()));
    } else if (column.missing_count() < column.size()) {
      report.numeric.push_back(numeric_distribution(table, column.name(), n_bins));
    }
  }
  report.correlations = correlation_matrix(table);
  return report;
}

nlohmann::ordered_json correlation_json(const EdaReport& report) {
  const auto& matrix = report.correlations;
  auto optional_value = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    if (v) return *v;
    return nullptr;
  };
  nlohmann::ordered_json doc;
  doc["target"] = report.target;
  nlohmann::ordered_json with_target = nlohmann::ordered_json::object();
  const auto it = std::find(matrix.labels.begin(), matrix.labels.end(), report.target);
  if (it != matrix.labels.end()) {
    const auto t = static_cast<std::size_t>(it - matrix.labels.begin());
    for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
      with_target[matrix.labels[i]] = optional_value(matrix.values[t][i]);
    }
  }
  doc["with_target"] = std::move(with_target);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : matrix.values) {
    nlohmann::ordered_json values = nlohmann::ordered_json::array();
    for (const auto& v : row) values.push_back(optional_value(v));
    rows.push_back(std::move(values));
  }
  doc["labels"] = matrix.labels;
  doc["matrix"] = std::move(rows);
  return doc;
}

std::string distribution_csv(const CategoricalDistribution& dist) {
  std::ostringstream out;
  out << "category,target_0,target_1,total\n";
  for (const auto& [name, counts] : dist.categories) {
    out << csv_field(name) << ',' << counts.target0 << ',' << counts.target1 << ','
        << counts.total() << '\n';
  }
  out << "missing," << dist.missing.target0 << ',' << dist.missing.target1 << ','
      << dist.missing.total() << '\n';
  return out.str();
}

std::string distribution_csv(const NumericDistribution& dist) {
  std::ostringstream out;
  out << "bin,lower,upper,target_0,target_1,total\n";
  for (std::size_t i = 0; i < dist.bins.size(); ++i) {
    const auto& counts = dist.bins[i];
    out << i << ',' << format_number(dist.edges[i]) << ',' << format_number(dist.edges[i + 1]) << ','
        << counts.target0 << ',' << counts.target1 << ',' << counts.total() << '\n';
  }
  out << "missing,,," << dist.missing.target0 << ',' << dist.missing.target1 << ','
      << dist.missing.total() << '\n';
  return out.str();
}

std::vector<std::filesystem::path> write_eda(const EdaReport& report,
                                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& dist : report.categorical) {
    auto path = dir / ("categorical_" + dist.column + ".csv");
    write_file(path, distribution_csv(dist));
    written.push_back(std::move(path));
  }
  for (const auto& dist : report.numeric) {
    auto path = dir / ("numeric_" + dist.column + ".csv");
    write_file(path, distribution_csv(dist));
    written.push_back(std::move(path));
  }
  auto path = dir / "correlations.json";
  write_file(path, correlation_json(report).dump(2) + "\n");
  written.push_back(std::move(path));
  return written;
}

}  // namespace attrition
