#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "hast/config.hpp"

namespace hast {

struct Prediction {
  Label label = 0;
  // Probability of `label`, in (0, 1].
  double confidence = 0.0;
};

struct WeightedExample {
  std::span<const double> x;
  Label y = 0;
  double weight = 0.0;
};

// C-class probabilistic classifier over fixed embeddings. Immutable once built.
class ProbModel {
 public:
  // `weights` is a row-major C x d matrix.
  static ProbModel logistic(int num_classes, std::size_t dim, std::vector<double> weights,
                            std::vector<double> bias);
  static ProbModel nearest_centroid(std::vector<std::vector<double>> centroids, double temperature);

  ModelKind kind() const { return kind_; }
  int num_classes() const { return num_classes_; }
  std::size_t dim() const { return dim_; }

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }
  const std::vector<std::vector<double>>& centroids() const { return centroids_; }
  double temperature() const { return temperature_; }

  // Throws std::invalid_argument on a dimension mismatch.
  std::vector<double> predict_proba(std::span<const double> x) const;
  Prediction predict(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static ProbModel from_json(const nlohmann::json& doc);

  bool operator==(const ProbModel&) const = default;

 private:
  ProbModel() = default;

  ModelKind kind_ = ModelKind::LogisticRegression;
  int num_classes_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
  std::vector<std::vector<double>> centroids_;
  double temperature_ = 1.0;
};

// argmax with ties broken by the lowest class index.
Prediction argmax(std::span<const double> proba);

// Numerically stable softmax, in place.
void softmax(std::span<double> logits);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

// sum_i w_i * CE(softmax(A x_i + b), y_i) and its gradient. `params` holds the
// row-major C x d matrix A followed by the C biases; the gradient uses the same layout.
LossGradient weighted_cross_entropy(std::span<const double> params, int num_classes,
                                    std::size_t dim, std::span<const WeightedExample> examples);

// Fresh model on every call. Weights are expected to be L1-normalized already.
// Logistic regression: zero initialization, full-batch gradient descent.
// Nearest centroid: weight-weighted class means; throws if a class has no weight.
ProbModel train_weighted(std::span<const WeightedExample> examples, int num_classes,
                         const ClassifierConfig& config, std::uint64_t rng_seed = 0);

}  // namespace hast
