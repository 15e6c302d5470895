#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrition/evaluate.hpp"
#include "attrition/table.hpp"
#include "json.hpp"

namespace attrition {

/// Row-major numeric design matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// Requires every column numeric and every cell present and finite.
DenseMatrix to_matrix(const Table& features);

struct LogRegConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 500;
  std::uint64_t seed = 0;
};

struct LogisticModel {
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double bias = 0.0;
  LogRegConfig config;

  nlohmann::ordered_json to_json() const;
};

struct LogisticPrediction {
  double probability = 0.5;
  int label = 1;
};

double sigmoid(double z);

/// Mean binary cross-entropy of the model (weights, bias) on (x, y).
double log_loss(const DenseMatrix& x, std::span<const int> y, std::span<const double> weights,
                double bias);

/// Analytic gradient of log_loss; returns {d/dweights, d/dbias}.
std::pair<std::vector<double>, double> log_loss_gradient(const DenseMatrix& x, std::span<const int> y,
                                                         std::span<const double> weights,
                                                         double bias);

/// Full-batch gradient descent from zero weights. When `loss_history` is
/// given it receives the loss before each epoch and after the last.
LogisticModel fit_logreg(const Table& features, std::span<const int> target,
                         const LogRegConfig& config = {},
                         std::vector<double>* loss_history = nullptr);

/// Label is 1 iff probability >= 0.5.
LogisticPrediction predict_logreg(const LogisticModel& model, std::span<const double> row);

struct ModelScore {
  std::string model;
  double accuracy = 0.0;
};

struct RegisteredModel {
  std::string name;
  ModelFactory factory;
};

/// Scores every model under the same scheme and seed; sorted by accuracy, best first.
std::vector<ModelScore> compare_models(const Table& features, std::span<const int> target,
                                       const CvScheme& scheme,
                                       const std::vector<RegisteredModel>& models,
                                       std::uint64_t seed = 0);

/// "model,accuracy" rows.
std::string comparison_csv(const std::vector<ModelScore>& scores);

}  // namespace attrition
