#include "attrition/evaluate.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "attrition/errors.hpp"
#include "attrition/models.hpp"

namespace attrition {
namespace {

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.support = tp + fn;
  if (tp + fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

nlohmann::ordered_json metric_row(double precision, double recall, double f1, std::size_t support) {
  return {{"precision", precision}, {"recall", recall}, {"f1-score", f1}, {"support", support}};
}

std::string fixed2(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  return buffer;
}

std::string pad_left(const std::string& text, std::size_t width) {
  return text.size() >= width ? text : std::string(width - text.size(), ' ') + text;
}

std::string pad_right(const std::string& text, std::size_t width) {
  return text.size() >= width ? text : text + std::string(width - text.size(), ' ');
}

CVResult score_folds(const ModelFactory& factory, const Table& features,
                     std::span<const int> target, const std::vector<std::vector<std::size_t>>& folds,
                     const CvScheme& scheme, std::uint64_t seed) {
  const std::size_t n = features.n_rows();
  CVResult result;
  result.scheme = scheme;
  result.fold_count = folds.size();
  result.predictions.assign(n, 0);
  std::vector<bool> in_test(n, false);

  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& test = folds[f];
    for (const auto r : test) in_test[r] = true;
    std::vector<std::size_t> train;
    train.reserve(n - test.size());
    for (std::size_t r = 0; r < n; ++r) {
      if (!in_test[r]) train.push_back(r);
    }
    for (const auto r : test) in_test[r] = false;

    const Table train_features = features.select_rows(train);
    Labels train_target;
    train_target.reserve(train.size());
    for (const auto r : train) train_target.push_back(target[r]);
    const Table test_features = features.select_rows(test);

    const bool single_class =
        std::all_of(train_target.begin(), train_target.end(),
                    [&](int label) { return label == train_target.front(); });
    std::unique_ptr<Classifier> model;
    if (single_class) {
      model = std::make_unique<MajorityClassifier>();
    } else {
      model = factory(mix_seed(seed, f));
      if (!model) throw ModelError("model factory returned no model");
    }
    model->fit(train_features, train_target);
    const auto predicted = model->predict(test_features);

    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      result.predictions[test[i]] = predicted[i];
      if (predicted[i] == target[test[i]]) ++correct;
    }
    result.per_fold_accuracy.push_back(static_cast<double>(correct) /
                                       static_cast<double>(test.size()));
  }
  result.mean_accuracy =
      std::accumulate(result.per_fold_accuracy.begin(), result.per_fold_accuracy.end(), 0.0) /
      static_cast<double>(result.per_fold_accuracy.size());
  return result;
}

void check_inputs(const Table& features, std::span<const int> target) {
  if (target.size() != features.n_rows()) {
    throw DataError("target has " + std::to_string(target.size()) + " labels for " +
                    std::to_string(features.n_rows()) + " rows");
  }
}

}  // namespace

nlohmann::ordered_json EvaluationReport::to_json() const {
  nlohmann::ordered_json doc;
  for (int c = 0; c < 2; ++c) {
    const auto& m = per_class[static_cast<std::size_t>(c)];
    auto row = metric_row(m.precision, m.recall, m.f1, m.support);
    row["precision_undefined"] = m.precision_undefined;
    row["recall_undefined"] = m.recall_undefined;
    doc[std::to_string(c)] = std::move(row);
  }
  doc["accuracy"] = accuracy;
  doc["total"] = total;
  doc["macro avg"] = metric_row(macro_avg.precision, macro_avg.recall, macro_avg.f1, macro_avg.support);
  doc["weighted avg"] =
      metric_row(weighted_avg.precision, weighted_avg.recall, weighted_avg.f1, weighted_avg.support);
  doc["confusion"] = {{"tp", confusion.tp}, {"fp", confusion.fp}, {"tn", confusion.tn}, {"fn", confusion.fn}};
  return doc;
}

std::string EvaluationReport::to_text() const {
  std::ostringstream out;
  constexpr std::size_t label_width = 14;
  constexpr std::size_t cell = 11;
  out << pad_right("", label_width) << pad_left("precision", cell) << pad_left("recall", cell)
      << pad_left("f1-score", cell) << pad_left("support", cell) << '\n';
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& m = per_class[c];
    out << pad_right(std::to_string(c), label_width) << pad_left(fixed2(m.precision), cell)
        << pad_left(fixed2(m.recall), cell) << pad_left(fixed2(m.f1), cell)
        << pad_left(std::to_string(m.support), cell) << '\n';
  }
  out << '\n';
  out << pad_right("accuracy", label_width) << pad_left("", cell) << pad_left("", cell)
      << pad_left(fixed2(accuracy), cell) << pad_left(std::to_string(total), cell) << '\n';
  auto average = [&](const char* label, const AverageMetrics& a) {
    out << pad_right(label, label_width) << pad_left(fixed2(a.precision), cell)
        << pad_left(fixed2(a.recall), cell) << pad_left(fixed2(a.f1), cell)
        << pad_left(std::to_string(a.support), cell) << '\n';
  };
  average("macro avg", macro_avg);
  average("weighted avg", weighted_avg);
  return out.str();
}

EvaluationReport metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("metrics: " + std::to_string(y_true.size()) + " labels vs " +
                    std::to_string(y_pred.size()) + " predictions");
  }
  if (y_true.empty()) throw DataError("metrics: no predictions to score");

  EvaluationReport report;
  auto& cm = report.confusion;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      throw ValidationError("metrics: labels must be 0 or 1");
    }
    if (t == 1 && p == 1) ++cm.tp;
    if (t == 0 && p == 1) ++cm.fp;
    if (t == 0 && p == 0) ++cm.tn;
    if (t == 1 && p == 0) ++cm.fn;
  }
  report.total = y_true.size();
  report.per_class[1] = class_metrics(cm.tp, cm.fp, cm.fn);
  // Class 0 as positive swaps the roles of the two classes.
  report.per_class[0] = class_metrics(cm.tn, cm.fn, cm.fp);
  report.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(report.total);

  const double n = static_cast<double>(report.total);
  for (const auto& m : report.per_class) {
    report.macro_avg.precision += m.precision;
    report.macro_avg.recall += m.recall;
    report.macro_avg.f1 += m.f1;
    const auto w = static_cast<double>(m.support);
    report.weighted_avg.precision += w * m.precision;
    report.weighted_avg.recall += w * m.recall;
    report.weighted_avg.f1 += w * m.f1;
  }
  report.macro_avg.precision /= 2.0;
  report.macro_avg.recall /= 2.0;
  report.macro_avg.f1 /= 2.0;
  report.weighted_avg.precision /= n;
  report.weighted_avg.recall /= n;
  report.weighted_avg.f1 /= n;
  report.macro_avg.support = report.total;
  report.weighted_avg.support = report.total;
  return report;
}

CvScheme CvScheme::parse(std::string_view text) {
  if (text == "loocv") return loocv();
  if (text.starts_with("kfold:")) {
    const auto digits = text.substr(6);
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && !digits.empty()) {
      if (k < 2) throw ConfigError("kfold needs k >= 2, got " + std::to_string(k));
      return kfold(k);
    }
  }
  throw ConfigError("unknown cv scheme '" + std::string(text) + "' (expected loocv or kfold:K)");
}

std::string CvScheme::to_string() const {
  return kind == Kind::Loocv ? "loocv" : "kfold:" + std::to_string(k);
}

nlohmann::ordered_json CVResult::to_json() const {
  nlohmann::ordered_json doc;
  doc["scheme"] = scheme.to_string();
  doc["fold_count"] = fold_count;
  doc["mean_accuracy"] = mean_accuracy;
  doc["per_fold_accuracy"] = per_fold_accuracy;
  return doc;
}

CVResult loocv(const ModelFactory& factory, const Table& features, std::span<const int> target,
               std::uint64_t seed) {
  check_inputs(features, target);
  const std::size_t n = features.n_rows();
  if (n < 2) throw DataError("leave-one-out needs at least two rows");
  std::vector<std::vector<std::size_t>> folds(n);
  for (std::size_t i = 0; i < n; ++i) folds[i] = {i};
  return score_folds(factory, features, target, folds, CvScheme::loocv(), seed);
}

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k, Rng& rng) {
  if (k < 2 || k > n) {
    throw ConfigError("kfold needs 2 <= k <= rows (k=" + std::to_string(k) +
                      ", rows=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                    order.begin() + static_cast<std::ptrdiff_t>(at + size));
    at += size;
  }
  return folds;
}

CVResult kfold(const ModelFactory& factory, const Table& features, std::span<const int> target,
               std::size_t k, std::uint64_t seed) {
  check_inputs(features, target);
  Rng rng(seed);
  const auto folds = kfold_partition(features.n_rows(), k, rng);
  return score_folds(factory, features, target, folds, CvScheme::kfold(k), seed);
}

CVResult cross_validate(const ModelFactory& factory, const Table& features,
                        std::span<const int> target, const CvScheme& scheme, std::uint64_t seed) {
  if (scheme.kind == CvScheme::Kind::Loocv) return loocv(factory, features, target, seed);
  return kfold(factory, features, target, scheme.k, seed);
}

OversampleResult oversample_minority(const Table& features, std::span<const int> target, Rng& rng) {
  check_inputs(features, target);
  std::vector<std::size_t> rows0;
  std::vector<std::size_t> rows1;
  for (std::size_t r = 0; r < target.size(); ++r) (target[r] == 1 ? rows1 : rows0).push_back(r);
  if (rows0.empty() || rows1.empty()) throw DataError("oversampling needs both classes present");

  const auto& minority = rows0.size() < rows1.size() ? rows0 : rows1;
  const std::size_t deficit =
      std::max(rows0.size(), rows1.size()) - std::min(rows0.size(), rows1.size());

  OversampleResult out;
  out.source_rows.resize(target.size());
  std::iota(out.source_rows.begin(), out.source_rows.end(), std::size_t{0});
  for (std::size_t i = 0; i < deficit; ++i) {
    out.source_rows.push_back(minority[rng.index(minority.size())]);
  }
  out.features = features.select_rows(out.source_rows);
  out.target.reserve(out.source_rows.size());
  for (const auto r : out.source_rows) out.target.push_back(target[r]);
  return out;
}

}  // namespace attrition
