#include "attrition/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "attrition/errors.hpp"

namespace attrition {

DenseMatrix to_matrix(const Table& features) {
  DenseMatrix x;
  x.rows = features.n_rows();
  x.cols = features.n_cols();
  x.data.resize(x.rows * x.cols);
  for (std::size_t c = 0; c < x.cols; ++c) {
    const auto& column = features.column(c);
    if (column.kind() != ColumnKind::Numeric) {
      throw DataError("logistic regression needs numeric features; '" + column.name() +
                      "' is categorical");
    }
    const auto& cells = column.numeric();
    for (std::size_t r = 0; r < x.rows; ++r) {
      if (!cells[r] || !std::isfinite(*cells[r])) {
        throw DataError("column '" + column.name() + "' row " + std::to_string(r + 1) +
                        " is missing or not finite");
      }
      x.data[r * x.cols + c] = *cells[r];
    }
  }
  return x;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

double linear(std::span<const double> row, std::span<const double> weights, double bias) {
  double z = bias;
  for (std::size_t j = 0; j < row.size(); ++j) z += weights[j] * row[j];
  return z;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_shapes(const DenseMatrix& x, std::span<const int> y, std::span<const double> weights) {
  if (y.size() != x.rows) throw DataError("label count differs from row count");
  if (weights.size() != x.cols) throw DataError("weight count differs from column count");
  if (x.rows == 0) throw DataError("log-loss of an empty dataset");
}

}  // namespace

double log_loss(const DenseMatrix& x, std::span<const int> y, std::span<const double> weights,
                double bias) {
  check_shapes(x, y, weights);
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double z = linear(x.row(r), weights, bias);
    // -[y log s(z) + (1-y) log(1 - s(z))] = softplus(z) - y z
    total += softplus(z) - (y[r] == 1 ? z : 0.0);
  }
  return total / static_cast<double>(x.rows);
}

std::pair<std::vector<double>, double> log_loss_gradient(const DenseMatrix& x, std::span<const int> y,
                                                         std::span<const double> weights,
                                                         double bias) {
  check_shapes(x, y, weights);
  std::vector<double> grad(x.cols, 0.0);
  double grad_bias = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    const double residual = sigmoid(linear(row, weights, bias)) - static_cast<double>(y[r]);
    for (std::size_t j = 0; j < x.cols; ++j) grad[j] += residual * row[j];
    grad_bias += residual;
  }
  const auto n = static_cast<double>(x.rows);
  for (auto& g : grad) g /= n;
  return {std::move(grad), grad_bias / n};
}

LogisticModel fit_logreg(const Table& features, std::span<const int> target,
                         const LogRegConfig& config, std::vector<double>* loss_history) {
  const DenseMatrix x = to_matrix(features);
  if (target.size() != x.rows) throw DataError("target length differs from row count");
  for (const int label : target) {
    if (label != 0 && label != 1) throw ValidationError("target labels must be 0 or 1");
  }
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");

  LogisticModel model;
  model.feature_names = features.column_names();
  model.weights.assign(x.cols, 0.0);
  model.config = config;
  if (x.rows == 0) return model;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (loss_history) loss_history->push_back(log_loss(x, target, model.weights, model.bias));
    const auto [grad, grad_bias] = log_loss_gradient(x, target, model.weights, model.bias);
    for (std::size_t j = 0; j < x.cols; ++j) model.weights[j] -= config.learning_rate * grad[j];
    model.bias -= config.learning_rate * grad_bias;
  }
  if (loss_history) loss_history->push_back(log_loss(x, target, model.weights, model.bias));
  return model;
}

LogisticPrediction predict_logreg(const LogisticModel& model, std::span<const double> row) {
  if (row.size() != model.weights.size()) {
    throw DataError("row has " + std::to_string(row.size()) + " values, model expects " +
                    std::to_string(model.weights.size()));
  }
  LogisticPrediction prediction;
  prediction.probability = sigmoid(linear(row, model.weights, model.bias));
  prediction.label = prediction.probability >= 0.5 ? 1 : 0;
  return prediction;
}

nlohmann::ordered_json LogisticModel::to_json() const {
  nlohmann::ordered_json doc;
  doc["config"] = {{"learning_rate", config.learning_rate},
                   {"epochs", config.epochs},
                   {"seed", config.seed}};
  nlohmann::ordered_json w = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < weights.size(); ++j) w[feature_names.at(j)] = weights[j];
  doc["weights"] = std::move(w);
  doc["bias"] = bias;
  return doc;
}

std::vector<ModelScore> compare_models(const Table& features, std::span<const int> target,
                                       const CvScheme& scheme,
                                       const std::vector<RegisteredModel>& models,
                                       std::uint64_t seed) {
  if (models.empty()) throw ConfigError("no models registered for comparison");
  std::vector<ModelScore> scores;
  scores.reserve(models.size());
  for (const auto& model : models) {
    const auto result = cross_validate(model.factory, features, target, scheme, seed);
    scores.push_back({model.name, result.mean_accuracy});
  }
  std::stable_sort(scores.begin(), scores.end(),
                   [](const ModelScore& a, const ModelScore& b) { return a.accuracy > b.accuracy; });
  return scores;
}

std::string comparison_csv(const std::vector<ModelScore>& scores) {
  std::ostringstream out;
  out << "model,accuracy\n";
  for (const auto& score : scores) out << score.model << ',' << format_number(score.accuracy) << '\n';
  return out.str();
}

}  // namespace attrition
