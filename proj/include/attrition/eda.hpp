#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attrition/errors.hpp"
#include "attrition/table.hpp"
#include "json.hpp"

namespace attrition {

/// Raised when either sequence has zero variance.
class UndefinedCorrelation : public DataError {
 public:
  using DataError::DataError;
};

struct TargetCounts {
  std::size_t target0 = 0;
  std::size_t target1 = 0;
  std::size_t total() const noexcept { return target0 + target1; }
  bool operator==(const TargetCounts&) const = default;
};

struct CategoricalDistribution {
  std::string column;
  /// Declared categories first (in declaration order), then any others alphabetically.
  std::vector<std::pair<std::string, TargetCounts>> categories;
  TargetCounts missing;

  const TargetCounts& at(std::string_view category) const;
};

struct NumericDistribution {
  std::string column;
  /// n_bins + 1 ascending edges; a constant column has the single bin [v, v].
  std::vector<double> edges;
  std::vector<TargetCounts> bins;
  TargetCounts missing;
};

struct CorrelationMatrix {
  std::vector<std::string> labels;
  /// Symmetric; an entry is absent when either column is constant over the
  /// pairwise-complete rows.
  std::vector<std::vector<std::optional<double>>> values;

  std::optional<double> at(std::string_view a, std::string_view b) const;
};

/// Target labels of a table (its target column must be present, 0/1, no Missing).
Labels target_labels(const Table& table);

CategoricalDistribution categorical_distribution(const Table& table, std::string_view column);
/// Equal-width bins over [min, max] of the present values; max lands in the last bin.
NumericDistribution numeric_distribution(const Table& table, std::string_view column,
                                         std::size_t n_bins);

/// Pearson product-moment correlation.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pairwise-complete correlations over the given numeric columns
/// (all numeric columns, identifiers and target included, when empty).
CorrelationMatrix correlation_matrix(const Table& table, std::vector<std::string> columns = {});

struct EdaReport {
  std::vector<CategoricalDistribution> categorical;
  std::vector<NumericDistribution> numeric;
  CorrelationMatrix correlations;
  std::string target;
};

EdaReport run_eda(const Table& table, std::size_t n_bins = 10);

/// Correlation summary: the target row of the matrix followed by the full matrix.
nlohmann::ordered_json correlation_json(const EdaReport& report);
std::string distribution_csv(const CategoricalDistribution& dist);
std::string distribution_csv(const NumericDistribution& dist);

/// Writes one CSV per distribution plus correlations.json into `dir`.
/// Returns the paths written.
std::vector<std::filesystem::path> write_eda(const EdaReport& report,
                                             const std::filesystem::path& dir);

}  // namespace attrition
