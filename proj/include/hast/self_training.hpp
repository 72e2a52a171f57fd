#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "hast/classifier.hpp"
#include "hast/neighbors.hpp"
#include "hast/pool.hpp"

namespace hast {

struct PseudoLabel {
  InstanceId id = 0;
  Label label = 0;
  double confidence = 0.0;
  Label knn_label = 0;

  bool operator==(const PseudoLabel&) const = default;
};

struct PseudoLabelBatch {
  std::vector<PseudoLabel> records;  // ascending id
  std::vector<std::size_t> histogram;  // per class, over records
  std::size_t total = 0;
};

// Majority label of the min(k, |refs|) nearest references (cosine distance).
// Vote ties go to the tied class with the smallest mean neighbour distance,
// then to the lowest class index. Throws on an empty reference set.
Label knn_vote(std::span<const double> x, const ReferenceSet& refs, std::size_t k,
               int num_classes);

// Every candidate with confidence s > 0.5 whose KNN vote agrees with the
// model's hard label. Candidates must be unlabeled in the pool behind `refs`.
PseudoLabelBatch select_pseudo_labels(const ProbModel& model, const Dataset& dataset,
                                      std::span<const InstanceId> candidates,
                                      const ReferenceSet& refs, std::size_t k);
PseudoLabelBatch select_pseudo_labels(const ProbModel& model, const Dataset& dataset,
                                      std::span<const InstanceId> candidates,
                                      const PoolState& pool, std::size_t k);

// alpha_c = 10 / (1 + exp(-z_c)) with z_c = (N/C - h_c) / max(1, h_c).
std::vector<double> class_balance_alpha(std::span<const std::size_t> histogram, std::size_t total);

// Pre-normalization weights parallel to pool.labeled(): 1.0 for human
// records, alpha[label] * beta for pseudo records.
std::vector<double> raw_weights(const PoolState& pool, std::span<const double> alpha, double beta);

// raw_weights scaled to unit L1 norm. Throws on an empty labeled pool.
std::vector<double> compute_weights(const PoolState& pool, std::span<const double> alpha,
                                    double beta);

std::vector<double> uniform_weights(std::size_t n);

// Trains a fresh model on the labeled records of `pool` with per-record weights.
ProbModel train_on_pool(const Dataset& dataset, const PoolState& pool,
                        std::span<const double> weights, const ExperimentConfig& config);

// Fresh model on the human records only, uniform weights.
ProbModel train_on_human_labels(const Dataset& dataset, const PoolState& pool,
                                const ExperimentConfig& config);

struct SelfTrainRound {
  std::size_t round = 0;
  std::size_t candidates = 0;
  std::size_t pseudo_count = 0;
  std::vector<std::size_t> histogram;
  std::vector<double> alpha;
  double beta = 1.0;
  double human_weight = 0.0;   // normalized weight mass on human records
  double pseudo_weight = 0.0;  // normalized weight mass on pseudo records

  nlohmann::json to_json() const;
};

struct SelfTrainResult {
  ProbModel model;
  PoolState pool;  // L_p and U_p after the last round
  std::vector<SelfTrainRound> rounds;
  std::vector<PseudoLabel> pseudo_labels;

  std::size_t pseudo_count() const { return pseudo_labels.size(); }
};

// HAST: T rounds of KNN-regularized hard pseudo-labeling with class-balance
// and pseudo-label down-weighting, retraining from scratch after each round.
// Predictions come from `current` in every round.
SelfTrainResult hast_self_train(const Dataset& dataset, const PoolState& pool,
                                const ProbModel& current, const ExperimentConfig& config,
                                Rng& rng);

// VERIPS candidates: margin above the threshold and the same hard label from
// `current` and `verification`. Returned in ascending id order.
std::vector<PseudoLabel> verify_candidates(const ProbModel& current,
                                           const ProbModel& verification,
                                           const Dataset& dataset,
                                           std::span<const InstanceId> candidates,
                                           double margin_threshold);

// VERIPS with the margin gate; verification model trained on human labels
// only; uniform weights.
SelfTrainResult verips_self_train(const Dataset& dataset, const PoolState& pool,
                                  const ProbModel& current, const ExperimentConfig& config,
                                  Rng& rng);

// Confidence s > 0.5 only (HAST selection without the KNN conjunct), uniform
// weights, a single retrain.
SelfTrainResult threshold_self_train(const Dataset& dataset, const PoolState& pool,
                                     const ProbModel& current, const ExperimentConfig& config,
                                     Rng& rng);

// Dispatches on config.self_training; None returns `current` unchanged.
SelfTrainResult self_train(const Dataset& dataset, const PoolState& pool,
                           const ProbModel& current, const ExperimentConfig& config, Rng& rng);

}  // namespace hast
