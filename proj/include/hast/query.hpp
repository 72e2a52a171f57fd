#pragma once

#include <span>
#include <vector>

#include "hast/classifier.hpp"
#include "hast/pool.hpp"

namespace hast {

struct QueryResult {
  std::vector<InstanceId> ids;
  // Strategy-specific score per id: margin for breaking ties, mean KL for
  // contrastive predictions, 0 for random.
  std::vector<double> scores;

  bool operator==(const QueryResult&) const = default;
};

inline constexpr double kProbabilityFloor = 1e-12;

// Difference of the two largest probabilities (1 for a single class).
double margin(std::span<const double> proba);

// KL(p || q) in nats, both distributions floored at kProbabilityFloor.
double kl_divergence(std::span<const double> p, std::span<const double> q);

QueryResult query_random(const PoolState& pool, std::size_t batch_size, Rng& rng);
QueryResult query_random(std::span<const InstanceId> candidates, std::size_t batch_size, Rng& rng);

// The batch_size smallest margins; equal margins go to the lower id.
QueryResult query_breaking_ties(const ProbModel& model, const Dataset& dataset,
                                std::span<const InstanceId> candidates, std::size_t batch_size);

// Score = mean over the m nearest labeled instances n of KL(P(n) || P(x)).
// The batch_size largest scores win; equal scores go to the lower id.
// Throws std::invalid_argument when the labeled pool is empty.
QueryResult query_contrastive(const ProbModel& model, const Dataset& dataset,
                              const PoolState& pool, std::span<const InstanceId> candidates,
                              std::size_t batch_size, std::size_t m_neighbors);

// Runs the configured strategy over U, subsampled to config.subsample_size
// first when the pool is larger.
QueryResult query(const ExperimentConfig& config, const ProbModel& model, const Dataset& dataset,
                  const PoolState& pool, Rng& rng);

}  // namespace hast
