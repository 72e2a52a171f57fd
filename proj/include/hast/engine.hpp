#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hast/classifier.hpp"
#include "hast/metrics.hpp"
#include "hast/query.hpp"
#include "hast/self_training.hpp"

namespace hast {

enum class Phase { AwaitingLabels, Training, SelfTraining, Evaluating, Done };

std::string to_string(Phase phase);

struct CurvePoint {
  std::size_t labeled_count = 0;
  double score = 0.0;
  std::size_t pseudo_count = 0;
  // Ids whose human labels produced this point (the seed set for point 0).
  std::vector<InstanceId> query_ids;
  std::vector<SelfTrainRound> self_training;
};

struct LearningCurve {
  std::vector<CurvePoint> points;
  Metric metric = Metric::Accuracy;
  std::string config_fingerprint;
  std::uint64_t rng_seed = 0;
  bool truncated = false;
  std::string truncation_reason;

  double final_score() const { return points.back().score; }

  nlohmann::json to_json() const;
  static LearningCurve from_json(const nlohmann::json& doc);
  // Columns: labeled_count,score,pseudo_count
  std::string to_csv() const;
};

// Normalized trapezoidal area under score vs. labeled_count.
double auc(const LearningCurve& curve);

struct RunAggregate {
  std::vector<LearningCurve> curves;
  MeanStd final_score;
  MeanStd area_under_curve;
  // Per point, averaged over runs.
  std::vector<std::size_t> labeled_counts;
  std::vector<double> mean_scores;
  std::vector<double> std_scores;
  std::vector<double> mean_pseudo_counts;
  bool single_run = false;

  nlohmann::json to_json() const;
};

// Throws std::invalid_argument for an empty list or curves whose
// configurations (fingerprints) or point counts differ.
RunAggregate aggregate_runs(std::vector<LearningCurve> curves);

// Returns the true label with probability 1 - noise, otherwise a uniform draw
// from the other C - 1 labels. noise == 0 consumes no randomness.
Label simulated_oracle(const Instance& instance, int num_classes, double noise, Rng& rng);

// Label source for a run. Returning nullopt aborts the run.
class Oracle {
 public:
  virtual ~Oracle() = default;
  // `batch_index` is 0 for the seed set, q for the q-th query.
  virtual std::optional<std::vector<Label>> answer(const Dataset& dataset,
                                                   std::span<const InstanceId> ids,
                                                   std::size_t batch_index) = 0;
};

class SimulatedOracle : public Oracle {
 public:
  SimulatedOracle(double noise, std::uint64_t seed, bool noise_on_seed = false);
  std::optional<std::vector<Label>> answer(const Dataset& dataset, std::span<const InstanceId> ids,
                                           std::size_t batch_index) override;

 private:
  double noise_;
  bool noise_on_seed_;
  Rng rng_;
};

// Seed of the simulated oracle's RNG stream, kept apart from the engine stream
// so that label noise never shifts queries or subsamples.
std::uint64_t oracle_seed(std::uint64_t rng_seed);

// Active learning with self-training as a resumable state machine: the seed
// set is the first pending batch, and each submit() runs
// train -> self-train -> evaluate -> query for the next batch.
class ActiveLearner {
 public:
  using PhaseObserver = std::function<void(Phase)>;

  // Validates the configuration against the dataset and draws the seed set.
  // `dataset` must outlive the learner.
  ActiveLearner(const Dataset& dataset, ExperimentConfig config);

  Phase phase() const { return phase_; }
  std::size_t batch_index() const { return batch_index_; }
  const QueryResult& pending() const { return pending_; }
  const LearningCurve& curve() const { return curve_; }
  const PoolState& pool() const { return pool_; }
  const ExperimentConfig& config() const { return config_; }
  const Dataset& dataset() const { return *dataset_; }
  // Model evaluated last (M*_q); empty before the seed labels arrive.
  const std::optional<ProbModel>& model() const { return model_; }
  // Model the next query is scored with.
  const std::optional<ProbModel>& query_model() const { return query_model_; }

  // Labels for pending().ids, in that order.
  void submit(std::span<const Label> labels, const PhaseObserver& observer = {});

  // Marks the curve as cut short and stops the run.
  void truncate(const std::string& reason);

 private:
  const Dataset* dataset_;
  ExperimentConfig config_;
  Rng rng_;
  PoolState pool_;
  Phase phase_ = Phase::AwaitingLabels;
  std::size_t batch_index_ = 0;
  QueryResult pending_;
  LearningCurve curve_;
  std::optional<ProbModel> model_;
  std::optional<ProbModel> query_model_;
};

LearningCurve run_active_learning(const Dataset& dataset, const ExperimentConfig& config,
                                  Oracle& oracle);
// Simulated oracle with config.label_noise.
LearningCurve run_active_learning(const Dataset& dataset, const ExperimentConfig& config);

}  // namespace hast
