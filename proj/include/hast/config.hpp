#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hast/dataset.hpp"

namespace hast {

enum class QueryStrategy { Random, BreakingTies, ContrastivePredictions };
enum class SelfTrainingMethod { None, HAST, VERIPS, Threshold };
enum class ModelKind { LogisticRegression, NearestCentroid };

std::string to_string(QueryStrategy s);
std::string to_string(SelfTrainingMethod m);
std::string to_string(ModelKind k);

// Throw ConfigError listing the valid values on unknown names.
QueryStrategy parse_query_strategy(const std::string& name);
SelfTrainingMethod parse_self_training(const std::string& name);
ModelKind parse_model_kind(const std::string& name);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ClassifierConfig {
  ModelKind kind = ModelKind::LogisticRegression;
  double learning_rate = 0.5;
  int epochs = 300;
  // Inverse temperature of the nearest-centroid softmax over squared distances.
  double temperature = 10.0;

  bool operator==(const ClassifierConfig&) const = default;
};

struct ExperimentConfig {
  std::size_t seed_size = 30;
  std::size_t num_queries = 10;
  std::size_t batch_size = 10;
  QueryStrategy query_strategy = QueryStrategy::BreakingTies;
  SelfTrainingMethod self_training = SelfTrainingMethod::HAST;
  std::size_t k = 5;
  double beta = 0.1;
  std::size_t self_train_iterations = 1;
  std::size_t subsample_size = 16384;
  double label_noise = 0.0;
  std::uint64_t rng_seed = 0;
  std::size_t num_runs = 5;
  ClassifierConfig classifier;

  // Neighbourhood size of the contrastive-predictions strategy.
  std::size_t m_neighbors = 10;
  // Margin threshold of the VERIPS candidate gate.
  double verips_threshold = 0.9;
  // false sets every class-balance factor to 1 (weighting ablation).
  bool class_weighting = true;
  // Replace the fixed beta by min(1, |human| / |pseudo|) each round.
  bool dynamic_beta = false;
  bool stratified_seed = false;
  bool noise_on_seed = false;
  // Query with the self-trained model (true) or the human-only model (false).
  bool query_with_self_trained = true;
  bool reveal_predictions = false;

  bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::json to_json(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys and bad values throw ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);

// Field-range checks that do not depend on a dataset.
void validate(const ExperimentConfig& config);
// Also checks the labeling budget against the training set size.
void validate(const ExperimentConfig& config, const Dataset& dataset);

// Stable hex digest of the configuration with rng_seed and num_runs removed;
// two runs that differ only by seed share a fingerprint.
std::string fingerprint(const ExperimentConfig& config);

}  // namespace hast
