#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attrition/rng.hpp"
#include "attrition/table.hpp"
#include "json.hpp"

namespace attrition {

class Classifier;
using ModelFactory = std::function<std::unique_ptr<Classifier>(std::uint64_t seed)>;

/// Confusion counts with class 1 as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  /// Set when the denominator was zero and the value was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

struct AverageMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvaluationReport {
  Confusion confusion;
  std::array<ClassMetrics, 2> per_class;
  double accuracy = 0.0;
  std::size_t total = 0;
  AverageMetrics macro_avg;
  AverageMetrics weighted_avg;

  /// Keys: "0", "1", "accuracy", "macro avg", "weighted avg", "confusion".
  nlohmann::ordered_json to_json() const;
  /// precision / recall / f1-score / support table, two decimals.
  std::string to_text() const;
};

EvaluationReport metrics(std::span<const int> y_true, std::span<const int> y_pred);

struct CvScheme {
  enum class Kind { Loocv, KFold };
  Kind kind = Kind::Loocv;
  std::size_t k = 0;

  static CvScheme loocv() { return {Kind::Loocv, 0}; }
  static CvScheme kfold(std::size_t k) { return {Kind::KFold, k}; }
  /// "loocv" or "kfold:K".
  static CvScheme parse(std::string_view text);
  std::string to_string() const;
};

struct CVResult {
  CvScheme scheme;
  std::vector<double> per_fold_accuracy;
  double mean_accuracy = 0.0;
  std::size_t fold_count = 0;
  /// Out-of-fold prediction for every row.
  std::vector<int> predictions;

  nlohmann::ordered_json to_json() const;
};

/// Fold i trains on every row but i; its model comes from factory(mix_seed(seed, i)).
/// A single-class training fold is scored by a constant predictor of that class.
CVResult loocv(const ModelFactory& factory, const Table& features, std::span<const int> target,
               std::uint64_t seed = 0);

/// Shuffled indices split into k folds whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k, Rng& rng);

CVResult kfold(const ModelFactory& factory, const Table& features, std::span<const int> target,
               std::size_t k, std::uint64_t seed = 0);

CVResult cross_validate(const ModelFactory& factory, const Table& features,
                        std::span<const int> target, const CvScheme& scheme,
                        std::uint64_t seed = 0);

struct OversampleResult {
  Table features;
  Labels target;
  /// Source row of every output row; the first n entries are 0..n-1.
  std::vector<std::size_t> source_rows;
};

/// Appends minority rows drawn with replacement until both classes have equal counts.
OversampleResult oversample_minority(const Table& features, std::span<const int> target, Rng& rng);

}  // namespace attrition
