#include "hast/query.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "hast/neighbors.hpp"

namespace hast {

double margin(std::span<const double> proba) {
  double first = -1.0, second = -1.0;
  for (double p : proba) {
    if (p > first) {
      second = first;
      first = p;
    } else if (p > second) {
      second = p;
    }
  }
  return proba.size() < 2 ? 1.0 : first - second;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("KL divergence of unequal supports");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = std::max(p[i], kProbabilityFloor);
    const double qi = std::max(q[i], kProbabilityFloor);
    kl += pi * std::log(pi / qi);
  }
  return kl;
}

namespace {

// Picks the top batch_size candidates under `better`, which must be a strict
// total order (scores first, id as the tie breaker).
template <typename Better>
QueryResult take_best(std::span<const InstanceId> candidates, std::vector<double> scores,
                      std::size_t batch_size, Better better) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take = std::min(batch_size, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return better(scores[a], scores[b]);
                      return candidates[a] < candidates[b];
                    });
  QueryResult out;
  for (std::size_t i = 0; i < take; ++i) {
    out.ids.push_back(candidates[order[i]]);
    out.scores.push_back(scores[order[i]]);
  }
  return out;
}

}  // namespace

QueryResult query_random(std::span<const InstanceId> candidates, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  QueryResult out;
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(out.ids), batch_size, rng);
  out.scores.assign(out.ids.size(), 0.0);
  return out;
}

QueryResult query_random(const PoolState& pool, std::size_t batch_size, Rng& rng) {
  const auto ids = pool.unlabeled_ids();
  return query_random(ids, batch_size, rng);
}

QueryResult query_breaking_ties(const ProbModel& model, const Dataset& dataset,
                                std::span<const InstanceId> candidates, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (InstanceId id : candidates)
    scores.push_back(margin(model.predict_proba(dataset.train_instance(id).embedding)));
  return take_best(candidates, std::move(scores), batch_size, std::less<>{});
}

QueryResult query_contrastive(const ProbModel& model, const Dataset& dataset,
                              const PoolState& pool, std::span<const InstanceId> candidates,
                              std::size_t batch_size, std::size_t m_neighbors) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  if (pool.labeled().empty())
    throw std::invalid_argument("contrastive predictions needs a non-empty labeled pool");
  const ReferenceSet refs = reference_from_pool(dataset, pool);
  std::vector<std::vector<double>> ref_proba;
  ref_proba.reserve(refs.size());
  for (const auto& point : refs.points) ref_proba.push_back(model.predict_proba(point));

  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (InstanceId id : candidates) {
    const auto& x = dataset.train_instance(id).embedding;
    const auto px = model.predict_proba(x);
    const auto neighbors = nearest(x, refs, m_neighbors);
    double sum = 0.0;
    for (const auto& n : neighbors) sum += kl_divergence(ref_proba[n.index], px);
    scores.push_back(sum / static_cast<double>(neighbors.size()));
  }
  return take_best(candidates, std::move(scores), batch_size, std::greater<>{});
}

QueryResult query(const ExperimentConfig& config, const ProbModel& model, const Dataset& dataset,
                  const PoolState& pool, Rng& rng) {
  std::vector<InstanceId> candidates;
  if (pool.unlabeled().size() > config.subsample_size) {
    candidates = subsample_unlabeled(pool, config.subsample_size, rng);
    spdlog::debug("query candidates subsampled: {} of {}", candidates.size(),
                  pool.unlabeled().size());
  } else {
    candidates = pool.unlabeled_ids();
  }
  switch (config.query_strategy) {
    case QueryStrategy::Random:
      return query_random(candidates, config.batch_size, rng);
    case QueryStrategy::BreakingTies:
      return query_breaking_ties(model, dataset, candidates, config.batch_size);
    case QueryStrategy::ContrastivePredictions:
      return query_contrastive(model, dataset, pool, candidates, config.batch_size,
                               config.m_neighbors);
  }
  throw std::logic_error("unhandled query strategy");
}

}  // namespace hast
