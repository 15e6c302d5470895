#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.
// The oracles deliberately avoid library helpers so they can check them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "attrition/dtree.hpp"
#include "attrition/table.hpp"

namespace fixtures {

using attrition::Column;
using attrition::ColumnKind;
using attrition::ColumnRole;
using attrition::ColumnSchema;
using attrition::Labels;
using attrition::Table;

inline Column num(std::string name, std::vector<std::optional<double>> cells,
                  ColumnRole role = ColumnRole::Feature) {
  return Column(ColumnSchema{std::move(name), ColumnKind::Numeric, {}, role, {}}, std::move(cells));
}

inline Column cat(std::string name, std::vector<std::optional<std::string>> cells,
                  std::vector<std::string> declared = {}, ColumnRole role = ColumnRole::Feature) {
  return Column(ColumnSchema{std::move(name), ColumnKind::Categorical, std::move(declared), role, {}},
                std::move(cells));
}

inline const std::vector<std::string>& experience_values() {
  static const std::vector<std::string> v{"Has relevent experience", "No relevent experience"};
  return v;
}

inline const std::vector<std::string>& enrollment_values() {
  static const std::vector<std::string> v{"no_enrollment", "Full time course", "Part time course"};
  return v;
}

// The eight-row worked example, features only.
inline Table sample_features() {
  const std::string has = "Has relevent experience";
  const std::string no = "No relevent experience";
  return Table({
      num("City_deve", {0.92, 0.776, 0.624, 0.789, 0.767, 0.764, 0.92, 0.92}),
      cat("relevent_experience", {has, no, no, no, has, has, has, has}, experience_values()),
      cat("enrolled_university",
          {"no_enrollment", "no_enrollment", "Full time course", "Full time course", "no_enrollment",
           "Part time course", "no_enrollment", "no_enrollment"},
          enrollment_values()),
  });
}

inline Labels sample_target() { return {1, 0, 0, 1, 0, 1, 0, 1}; }

// Same data with identifier and target columns, as loaded from CSV.
inline Table sample_full() {
  std::vector<Column> columns;
  columns.push_back(num("S.No", {1, 2, 3, 4, 5, 6, 7, 8}, ColumnRole::Identifier));
  const Table features = sample_features();
  for (const auto& c : features.columns()) columns.push_back(c);
  columns.push_back(num("target", {1, 0, 0, 1, 0, 1, 0, 1}, ColumnRole::Target));
  return Table(std::move(columns));
}

// ---- oracles -------------------------------------------------------------

inline double entropy_oracle(const std::vector<std::size_t>& counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  double h = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

inline double entropy_oracle(const Labels& y) {
  std::size_t n1 = 0;
  for (int v : y) n1 += v == 1;
  return entropy_oracle(std::vector<std::size_t>{y.size() - n1, n1});
}

struct OracleSplit {
  double conditional = 0;
  double gain = 0;
  bool degenerate = false;
};

// Partition rows by category (or by >= mean for numeric columns) and weight
// each child's entropy by its share of the rows.
inline OracleSplit split_oracle(const Table& x, const std::string& column, const Labels& y) {
  const auto& col = x.column(column);
  std::map<std::string, Labels> groups;
  if (col.kind() == ColumnKind::Numeric) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& v : col.numeric()) {
      if (v) {
        sum += *v;
        ++n;
      }
    }
    const double mean = sum / static_cast<double>(n);
    for (std::size_t r = 0; r < y.size(); ++r) {
      groups[*col.numeric()[r] >= mean ? "high" : "low"].push_back(y[r]);
    }
  } else {
    for (std::size_t r = 0; r < y.size(); ++r) groups[*col.categorical()[r]].push_back(y[r]);
  }
  OracleSplit out;
  const double parent = entropy_oracle(y);
  for (const auto& [key, labels] : groups) {
    out.conditional += static_cast<double>(labels.size()) / static_cast<double>(y.size()) *
                       entropy_oracle(labels);
  }
  out.degenerate = col.kind() == ColumnKind::Numeric && groups.size() < 2;
  out.gain = out.degenerate ? 0.0 : parent - out.conditional;
  if (out.degenerate) out.conditional = parent;
  return out;
}

// ---- random data ---------------------------------------------------------

// Small random table: 1-3 features mixing categorical {a,b,c} and numeric
// values from a coarse grid, plus random 0/1 labels.
struct RandomCase {
  Table features;
  Labels target;
};

inline RandomCase random_case(std::mt19937_64& gen, std::size_t min_rows, std::size_t max_rows,
                              std::size_t max_features = 3) {
  std::uniform_int_distribution<std::size_t> rows_dist(min_rows, max_rows);
  std::uniform_int_distribution<std::size_t> feat_dist(1, max_features);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> pick3(0, 2);
  const std::size_t n = rows_dist(gen);
  const std::size_t p = feat_dist(gen);
  static const std::vector<double> grid{0.0, 0.25, 0.5, 1.0};
  std::uniform_int_distribution<std::size_t> grid_pick(0, grid.size() - 1);
  static const std::vector<std::string> cats{"a", "b", "c"};

  std::vector<Column> columns;
  for (std::size_t j = 0; j < p; ++j) {
    const std::string name = "f" + std::to_string(j);
    if (coin(gen) == 0) {
      std::vector<std::optional<std::string>> cells;
      for (std::size_t r = 0; r < n; ++r) cells.emplace_back(cats[static_cast<std::size_t>(pick3(gen))]);
      columns.push_back(cat(name, std::move(cells), cats));
    } else {
      std::vector<std::optional<double>> cells;
      for (std::size_t r = 0; r < n; ++r) cells.emplace_back(grid[grid_pick(gen)]);
      columns.push_back(num(name, std::move(cells)));
    }
  }
  Labels y;
  for (std::size_t r = 0; r < n; ++r) y.push_back(coin(gen));
  return {Table(std::move(columns)), std::move(y)};
}

// Conflict-consistent synthetic attrition-like data: identical feature rows
// always share a label, and the label depends on the features.
inline Table synthetic_hr(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> cdi_step(0, 29);
  std::uniform_int_distribution<int> pick3(0, 2);
  std::uniform_int_distribution<int> hours(1, 300);
  std::vector<std::optional<double>> id, cdi, train, target;
  std::vector<std::optional<std::string>> exp, enrol;
  for (std::size_t r = 0; r < n; ++r) {
    const double c = 0.45 + 0.0175 * cdi_step(gen);
    const std::string e = experience_values()[static_cast<std::size_t>(pick3(gen) == 0)];
    const std::string u = enrollment_values()[static_cast<std::size_t>(pick3(gen))];
    const double h = hours(gen);
    const bool leaves = (c < 0.62 && u != "no_enrollment") || (c < 0.55 && e == experience_values()[1]) ||
                        (u == "Full time course" && h < 60);
    id.emplace_back(static_cast<double>(r + 1));
    cdi.emplace_back(c);
    exp.emplace_back(e);
    enrol.emplace_back(u);
    train.emplace_back(h);
    target.emplace_back(leaves ? 1.0 : 0.0);
  }
  return Table({
      num("enrollee_id", std::move(id), ColumnRole::Identifier),
      num("city_development_index", std::move(cdi)),
      cat("relevent_experience", std::move(exp), experience_values()),
      cat("enrolled_university", std::move(enrol), enrollment_values()),
      num("training_hours", std::move(train)),
      num("target", std::move(target), ColumnRole::Target),
  });
}

inline const char* synthetic_schema_text() {
  return "[enrollee_id]\nkind = numeric\nrole = identifier\n"
         "[city_development_index]\nkind = numeric\n"
         "[relevent_experience]\nkind = categorical\n"
         "values = Has relevent experience | No relevent experience\n"
         "[enrolled_university]\nkind = categorical\n"
         "values = no_enrollment | Full time course | Part time course\n"
         "[training_hours]\nkind = numeric\n"
         "[target]\nkind = numeric\nrole = target\n";
}

// Writes the synthetic table and its schema into `dir`; returns {csv, schema}.
inline std::pair<std::filesystem::path, std::filesystem::path> write_synthetic(
    const std::filesystem::path& dir, std::size_t n, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const auto csv = dir / "synthetic.csv";
  const auto schema = dir / "synthetic.schema";
  attrition::save_csv(synthetic_hr(n, seed), csv);
  std::ofstream(schema) << synthetic_schema_text();
  return {csv, schema};
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("attrition_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace fixtures
