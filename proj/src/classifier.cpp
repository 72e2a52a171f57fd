#include "hast/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

namespace hast {

using nlohmann::json;

ProbModel ProbModel::logistic(int num_classes, std::size_t dim, std::vector<double> weights,
                              std::vector<double> bias) {
  if (num_classes <= 0 || dim == 0) throw std::invalid_argument("empty model shape");
  if (weights.size() != static_cast<std::size_t>(num_classes) * dim ||
      bias.size() != static_cast<std::size_t>(num_classes))
    throw std::invalid_argument("parameter sizes do not match C x d");
  for (double v : weights)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite model parameter");
  for (double v : bias)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite model parameter");
  ProbModel m;
  m.kind_ = ModelKind::LogisticRegression;
  m.num_classes_ = num_classes;
  m.dim_ = dim;
  m.weights_ = std::move(weights);
  m.bias_ = std::move(bias);
  return m;
}

ProbModel ProbModel::nearest_centroid(std::vector<std::vector<double>> centroids,
                                      double temperature) {
  if (centroids.empty() || centroids.front().empty()) throw std::invalid_argument("empty model shape");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw std::invalid_argument("temperature must be positive");
  const std::size_t dim = centroids.front().size();
  for (const auto& c : centroids) {
    if (c.size() != dim) throw std::invalid_argument("centroid dimensions differ");
    for (double v : c)
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite model parameter");
  }
  ProbModel m;
  m.kind_ = ModelKind::NearestCentroid;
  m.num_classes_ = static_cast<int>(centroids.size());
  m.dim_ = dim;
  m.centroids_ = std::move(centroids);
  m.temperature_ = temperature;
  return m;
}

void softmax(std::span<double> logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - max);
    sum += z;
  }
  for (double& z : logits) z /= sum;
}

std::vector<double> ProbModel::predict_proba(std::span<const double> x) const {
  if (x.size() != dim_)
    throw std::invalid_argument("embedding dimension " + std::to_string(x.size()) +
                                " does not match model dimension " + std::to_string(dim_));
  const auto C = static_cast<std::size_t>(num_classes_);
  std::vector<double> logits(C);
  if (kind_ == ModelKind::LogisticRegression) {
    for (std::size_t c = 0; c < C; ++c) {
      const double* row = weights_.data() + c * dim_;
      double z = bias_[c];
      for (std::size_t j = 0; j < dim_; ++j) z += row[j] * x[j];
      logits[c] = z;
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        const double diff = x[j] - centroids_[c][j];
        d2 += diff * diff;
      }
      logits[c] = -temperature_ * d2;
    }
  }
  softmax(logits);
  return logits;
}

Prediction argmax(std::span<const double> proba) {
  Prediction best{0, proba.empty() ? 0.0 : proba[0]};
  for (std::size_t c = 1; c < proba.size(); ++c) {
    if (proba[c] > best.confidence) best = {static_cast<Label>(c), proba[c]};
  }
  return best;
}

Prediction ProbModel::predict(std::span<const double> x) const { return argmax(predict_proba(x)); }

json ProbModel::to_json() const {
  json doc{{"kind", hast::to_string(kind_)}, {"num_classes", num_classes_}, {"dim", dim_}};
  if (kind_ == ModelKind::LogisticRegression) {
    doc["weights"] = weights_;
    doc["bias"] = bias_;
  } else {
    std::vector<double> flat;
    for (const auto& c : centroids_) flat.insert(flat.end(), c.begin(), c.end());
    doc["centroids"] = flat;
    doc["temperature"] = temperature_;
  }
  return doc;
}

ProbModel ProbModel::from_json(const json& doc) {
  const auto kind = parse_model_kind(doc.at("kind").get<std::string>());
  const int C = doc.at("num_classes").get<int>();
  const auto d = doc.at("dim").get<std::size_t>();
  if (kind == ModelKind::LogisticRegression)
    return logistic(C, d, doc.at("weights").get<std::vector<double>>(),
                    doc.at("bias").get<std::vector<double>>());
  const auto flat = doc.at("centroids").get<std::vector<double>>();
  if (C <= 0 || flat.size() != static_cast<std::size_t>(C) * d)
    throw std::invalid_argument("centroid array does not match C x d");
  std::vector<std::vector<double>> centroids;
  for (int c = 0; c < C; ++c)
    centroids.emplace_back(flat.begin() + c * static_cast<std::ptrdiff_t>(d),
                           flat.begin() + (c + 1) * static_cast<std::ptrdiff_t>(d));
  return nearest_centroid(std::move(centroids), doc.at("temperature").get<double>());
}

LossGradient weighted_cross_entropy(std::span<const double> params, int num_classes,
                                    std::size_t dim, std::span<const WeightedExample> examples) {
  const auto C = static_cast<std::size_t>(num_classes);
  if (params.size() != C * dim + C) throw std::invalid_argument("parameter vector has wrong size");
  const double* A = params.data();
  const double* b = params.data() + C * dim;

  LossGradient out;
  out.gradient.assign(params.size(), 0.0);
  double* gA = out.gradient.data();
  double* gb = out.gradient.data() + C * dim;

  std::vector<double> p(C);
  for (const auto& ex : examples) {
    double max = -INFINITY;
    for (std::size_t c = 0; c < C; ++c) {
      double z = b[c];
      const double* row = A + c * dim;
      for (std::size_t j = 0; j < dim; ++j) z += row[j] * ex.x[j];
      p[c] = z;
      max = std::max(max, z);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += std::exp(p[c] - max);
    const double log_norm = max + std::log(sum);
    const auto y = static_cast<std::size_t>(ex.y);
    out.loss += ex.weight * (log_norm - p[y]);
    for (std::size_t c = 0; c < C; ++c) {
      const double prob = std::exp(p[c] - log_norm);
      const double dz = ex.weight * (prob - (c == y ? 1.0 : 0.0));
      double* grow = gA + c * dim;
      for (std::size_t j = 0; j < dim; ++j) grow[j] += dz * ex.x[j];
      gb[c] += dz;
    }
  }
  return out;
}

namespace {

void check_examples(std::span<const WeightedExample> examples, int num_classes) {
  if (examples.empty()) throw std::invalid_argument("cannot train on an empty example set");
  if (num_classes <= 0) throw std::invalid_argument("number of classes must be positive");
  const std::size_t dim = examples.front().x.size();
  for (const auto& ex : examples) {
    if (ex.x.size() != dim) throw std::invalid_argument("inconsistent example dimensions");
    if (ex.y < 0 || ex.y >= num_classes)
      throw std::invalid_argument("label " + std::to_string(ex.y) + " out of range");
    if (!(ex.weight > 0.0) || !std::isfinite(ex.weight))
      throw std::invalid_argument("example weights must be positive and finite");
  }
}

ProbModel train_logistic(std::span<const WeightedExample> examples, int num_classes,
                         const ClassifierConfig& config) {
  const std::size_t dim = examples.front().x.size();
  const auto C = static_cast<std::size_t>(num_classes);
  std::vector<double> params(C * dim + C, 0.0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto lg = weighted_cross_entropy(params, num_classes, dim, examples);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * lg.gradient[i];
  }
  std::vector<double> bias(C);
  for (std::size_t c = 0; c < C; ++c) bias[c] = params[C * dim + c];
  params.resize(C * dim);
  return ProbModel::logistic(num_classes, dim, std::move(params), std::move(bias));
}

ProbModel train_centroids(std::span<const WeightedExample> examples, int num_classes,
                          const ClassifierConfig& config) {
  const std::size_t dim = examples.front().x.size();
  const auto C = static_cast<std::size_t>(num_classes);
  std::vector<std::vector<double>> centroids(C, std::vector<double>(dim, 0.0));
  std::vector<double> mass(C, 0.0);
  for (const auto& ex : examples) {
    const auto c = static_cast<std::size_t>(ex.y);
    mass[c] += ex.weight;
    for (std::size_t j = 0; j < dim; ++j) centroids[c][j] += ex.weight * ex.x[j];
  }
  for (std::size_t c = 0; c < C; ++c) {
    if (mass[c] <= 0.0)
      throw std::invalid_argument("class " + std::to_string(c) +
                                  " has zero total weight; cannot place its centroid");
    for (double& v : centroids[c]) v /= mass[c];
  }
  return ProbModel::nearest_centroid(std::move(centroids), config.temperature);
}

}  // namespace

ProbModel train_weighted(std::span<const WeightedExample> examples, int num_classes,
                         const ClassifierConfig& config, std::uint64_t /*rng_seed*/) {
  check_examples(examples, num_classes);
  const bool single_class =
      std::all_of(examples.begin(), examples.end(),
                  [&](const WeightedExample& ex) { return ex.y == examples.front().y; });
  if (single_class && num_classes > 1)
    spdlog::warn("training on a single-class pool (class {}, {} examples)", examples.front().y,
                 examples.size());
  if (config.kind == ModelKind::LogisticRegression)
    return train_logistic(examples, num_classes, config);
  return train_centroids(examples, num_classes, config);
}

}  // namespace hast
