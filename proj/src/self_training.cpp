#include "hast/self_training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "hast/query.hpp"

namespace hast {

using nlohmann::json;

Label knn_vote(std::span<const double> x, const ReferenceSet& refs, std::size_t k,
               int num_classes) {
  if (refs.size() == 0) throw std::invalid_argument("knn vote needs a non-empty reference pool");
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  const auto neighbors = nearest(x, refs, k);
  const auto C = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> votes(C, 0);
  std::vector<double> dist(C, 0.0);
  for (const auto& n : neighbors) {
    const auto c = static_cast<std::size_t>(refs.labels[n.index]);
    if (c >= C) throw std::invalid_argument("reference label out of range");
    ++votes[c];
    dist[c] += n.distance;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < C; ++c) {
    if (votes[c] > votes[best]) {
      best = c;
    } else if (votes[c] == votes[best] && votes[c] > 0) {
      // Equal counts: compare mean distances; sums suffice since counts match.
      if (dist[c] < dist[best]) best = c;
    }
  }
  return static_cast<Label>(best);
}

PseudoLabelBatch select_pseudo_labels(const ProbModel& model, const Dataset& dataset,
                                      std::span<const InstanceId> candidates,
                                      const ReferenceSet& refs, std::size_t k) {
  PseudoLabelBatch batch;
  batch.histogram.assign(static_cast<std::size_t>(model.num_classes()), 0);
  std::vector<InstanceId> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  for (InstanceId id : sorted) {
    const auto& x = dataset.train_instance(id).embedding;
    const Prediction pred = model.predict(x);
    if (!(pred.confidence > 0.5)) continue;
    const Label knn = knn_vote(x, refs, k, model.num_classes());
    if (knn != pred.label) continue;
    batch.records.push_back({id, pred.label, pred.confidence, knn});
    ++batch.histogram[static_cast<std::size_t>(pred.label)];
  }
  batch.total = batch.records.size();
  return batch;
}

PseudoLabelBatch select_pseudo_labels(const ProbModel& model, const Dataset& dataset,
                                      std::span<const InstanceId> candidates,
                                      const PoolState& pool, std::size_t k) {
  return select_pseudo_labels(model, dataset, candidates, reference_from_pool(dataset, pool), k);
}

std::vector<double> class_balance_alpha(std::span<const std::size_t> histogram, std::size_t total) {
  const double expected = static_cast<double>(total) / static_cast<double>(histogram.size());
  std::vector<double> alpha;
  alpha.reserve(histogram.size());
  for (std::size_t h : histogram) {
    const double count = static_cast<double>(h);
    const double z = (expected - count) / std::max(1.0, count);
    // exp(-z) underflows against 1 once z > ~37; keep the value below 10.
    alpha.push_back(std::min(10.0 / (1.0 + std::exp(-z)), std::nextafter(10.0, 0.0)));
  }
  return alpha;
}

std::vector<double> raw_weights(const PoolState& pool, std::span<const double> alpha, double beta) {
  std::vector<double> w;
  w.reserve(pool.labeled().size());
  for (const auto& r : pool.labeled()) {
    if (r.provenance == Provenance::Human) {
      w.push_back(1.0);
    } else {
      w.push_back(alpha[static_cast<std::size_t>(r.label)] * beta);
    }
  }
  return w;
}

std::vector<double> compute_weights(const PoolState& pool, std::span<const double> alpha,
                                    double beta) {
  if (pool.labeled().empty()) throw std::invalid_argument("cannot weight an empty labeled pool");
  auto w = raw_weights(pool, alpha, beta);
  double sum = 0.0;
  for (double v : w) sum += std::abs(v);
  for (double& v : w) v /= sum;
  return w;
}

std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

ProbModel train_on_pool(const Dataset& dataset, const PoolState& pool,
                        std::span<const double> weights, const ExperimentConfig& config) {
  const auto& records = pool.labeled();
  if (weights.size() != records.size())
    throw std::invalid_argument("one weight per labeled record is required");
  std::vector<WeightedExample> examples;
  examples.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    examples.push_back({dataset.train_instance(records[i].id).embedding, records[i].label, weights[i]});
  return train_weighted(examples, dataset.num_classes, config.classifier, config.rng_seed);
}

ProbModel train_on_human_labels(const Dataset& dataset, const PoolState& pool,
                                const ExperimentConfig& config) {
  const PoolState human = pool.human_only();
  return train_on_pool(dataset, human, uniform_weights(human.labeled().size()), config);
}

json SelfTrainRound::to_json() const {
  return json{{"round", round},         {"candidates", candidates},
              {"pseudo_count", pseudo_count}, {"histogram", histogram},
              {"alpha", alpha},         {"beta", beta},
              {"human_weight", human_weight}, {"pseudo_weight", pseudo_weight}};
}

namespace {

std::vector<InstanceId> draw_candidates(const PoolState& pool, const ExperimentConfig& config,
                                        Rng& rng) {
  if (pool.unlabeled().empty()) return {};
  return subsample_unlabeled(pool, config.subsample_size, rng);
}

void record_mass(SelfTrainRound& round, const PoolState& pool, std::span<const double> weights) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (pool.labeled()[i].provenance == Provenance::Human)
      round.human_weight += weights[i];
    else
      round.pseudo_weight += weights[i];
  }
}

std::vector<std::size_t> histogram_of(std::span<const PseudoLabel> labels, int num_classes) {
  std::vector<std::size_t> h(static_cast<std::size_t>(num_classes), 0);
  for (const auto& p : labels) ++h[static_cast<std::size_t>(p.label)];
  return h;
}

}  // namespace

SelfTrainResult hast_self_train(const Dataset& dataset, const PoolState& pool,
                                const ProbModel& current, const ExperimentConfig& config,
                                Rng& rng) {
  SelfTrainResult result{current, pool, {}, {}};
  PoolState& lp = result.pool;
  const auto C = static_cast<std::size_t>(dataset.num_classes);

  for (std::size_t t = 1; t <= config.self_train_iterations; ++t) {
    SelfTrainRound round;
    round.round = t;
    const auto candidates = draw_candidates(lp, config, rng);
    round.candidates = candidates.size();

    PseudoLabelBatch batch;
    if (candidates.empty()) {
      batch.histogram.assign(C, 0);
    } else {
      batch = select_pseudo_labels(current, dataset, candidates, lp, config.k);
    }
    for (const auto& p : batch.records) lp.add_pseudo(p.id, p.label, 1.0);
    result.pseudo_labels.insert(result.pseudo_labels.end(), batch.records.begin(),
                                batch.records.end());

    std::vector<double> alpha = config.class_weighting
                                    ? class_balance_alpha(batch.histogram, batch.total)
                                    : std::vector<double>(C, 1.0);
    double beta = config.beta;
    const std::size_t pseudo_total = lp.pseudo_count();
    if (config.dynamic_beta && pseudo_total > 0)
      beta = std::min(1.0, static_cast<double>(lp.human_count()) / static_cast<double>(pseudo_total));

    const auto raw = raw_weights(lp, alpha, beta);
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (lp.labeled()[i].provenance == Provenance::Pseudo) lp.set_raw_weight(i, raw[i]);
    const auto weights = compute_weights(lp, alpha, beta);

    round.pseudo_count = batch.total;
    round.histogram = batch.histogram;
    round.alpha = alpha;
    round.beta = beta;
    record_mass(round, lp, weights);
    if (batch.total == 0) spdlog::info("self-training round {}: no pseudo-labels selected", t);

    result.model = train_on_pool(dataset, lp, weights, config);
    result.rounds.push_back(std::move(round));
  }
  return result;
}

std::vector<PseudoLabel> verify_candidates(const ProbModel& current,
                                           const ProbModel& verification,
                                           const Dataset& dataset,
                                           std::span<const InstanceId> candidates,
                                           double margin_threshold) {
  std::vector<InstanceId> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<PseudoLabel> out;
  for (InstanceId id : sorted) {
    const auto& x = dataset.train_instance(id).embedding;
    const auto proba = current.predict_proba(x);
    if (!(margin(proba) > margin_threshold)) continue;
    const Prediction pred = argmax(proba);
    const Prediction check = verification.predict(x);
    if (check.label != pred.label) continue;
    out.push_back({id, pred.label, pred.confidence, check.label});
  }
  return out;
}

namespace {

// Shared tail of the uniform-weight methods: add the selection, retrain, log.
void apply_uniform_round(SelfTrainResult& result, const Dataset& dataset,
                         const ExperimentConfig& config, std::vector<PseudoLabel> selected,
                         std::size_t round_index, std::size_t candidate_count) {
  PoolState& lp = result.pool;
  for (const auto& p : selected) lp.add_pseudo(p.id, p.label, 1.0);
  const auto weights = uniform_weights(lp.labeled().size());

  SelfTrainRound round;
  round.round = round_index;
  round.candidates = candidate_count;
  round.pseudo_count = selected.size();
  round.histogram = histogram_of(selected, dataset.num_classes);
  round.beta = 1.0;
  record_mass(round, lp, weights);

  result.pseudo_labels.insert(result.pseudo_labels.end(), selected.begin(), selected.end());
  result.model = train_on_pool(dataset, lp, weights, config);
  result.rounds.push_back(std::move(round));
}

}  // namespace

SelfTrainResult verips_self_train(const Dataset& dataset, const PoolState& pool,
                                  const ProbModel& current, const ExperimentConfig& config,
                                  Rng& rng) {
  SelfTrainResult result{current, pool, {}, {}};
  const ProbModel verification = train_on_human_labels(dataset, pool, config);
  for (std::size_t t = 1; t <= config.self_train_iterations; ++t) {
    const auto candidates = draw_candidates(result.pool, config, rng);
    auto selected = verify_candidates(result.model, verification, dataset, candidates,
                                      config.verips_threshold);
    apply_uniform_round(result, dataset, config, std::move(selected), t, candidates.size());
  }
  return result;
}

SelfTrainResult threshold_self_train(const Dataset& dataset, const PoolState& pool,
                                     const ProbModel& current, const ExperimentConfig& config,
                                     Rng& rng) {
  SelfTrainResult result{current, pool, {}, {}};
  const auto candidates = draw_candidates(pool, config, rng);
  std::vector<InstanceId> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<PseudoLabel> selected;
  for (InstanceId id : sorted) {
    const Prediction pred = current.predict(dataset.train_instance(id).embedding);
    if (pred.confidence > 0.5) selected.push_back({id, pred.label, pred.confidence, pred.label});
  }
  apply_uniform_round(result, dataset, config, std::move(selected), 1, candidates.size());
  return result;
}

SelfTrainResult self_train(const Dataset& dataset, const PoolState& pool,
                           const ProbModel& current, const ExperimentConfig& config, Rng& rng) {
  switch (config.self_training) {
    case SelfTrainingMethod::None:
      return {current, pool, {}, {}};
    case SelfTrainingMethod::HAST:
      return hast_self_train(dataset, pool, current, config, rng);
    case SelfTrainingMethod::VERIPS:
      return verips_self_train(dataset, pool, current, config, rng);
    case SelfTrainingMethod::Threshold:
      return threshold_self_train(dataset, pool, current, config, rng);
  }
  throw std::logic_error("unhandled self-training method");
}

}  // namespace hast
