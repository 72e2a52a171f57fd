#include "hast/engine.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "hast/metrics.hpp"

namespace hast {

using nlohmann::json;

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::AwaitingLabels: return "AwaitingLabels";
    case Phase::Training: return "Training";
    case Phase::SelfTraining: return "SelfTraining";
    case Phase::Evaluating: return "Evaluating";
    case Phase::Done: return "Done";
  }
  return "?";
}

namespace {

SelfTrainRound round_from_json(const json& doc) {
  SelfTrainRound r;
  r.round = doc.at("round").get<std::size_t>();
  r.candidates = doc.at("candidates").get<std::size_t>();
  r.pseudo_count = doc.at("pseudo_count").get<std::size_t>();
  r.histogram = doc.at("histogram").get<std::vector<std::size_t>>();
  r.alpha = doc.at("alpha").get<std::vector<double>>();
  r.beta = doc.at("beta").get<double>();
  r.human_weight = doc.at("human_weight").get<double>();
  r.pseudo_weight = doc.at("pseudo_weight").get<double>();
  return r;
}

}  // namespace

json LearningCurve::to_json() const {
  json pts = json::array();
  for (const auto& p : points) {
    json rounds = json::array();
    for (const auto& r : p.self_training) rounds.push_back(r.to_json());
    pts.push_back({{"labeled_count", p.labeled_count},
                   {"score", p.score},
                   {"pseudo_count", p.pseudo_count},
                   {"query_ids", p.query_ids},
                   {"self_training", rounds}});
  }
  json doc{{"metric", hast::to_string(metric)},
           {"config_fingerprint", config_fingerprint},
           {"rng_seed", rng_seed},
           {"truncated", truncated},
           {"points", pts}};
  if (truncated) doc["truncation_reason"] = truncation_reason;
  return doc;
}

LearningCurve LearningCurve::from_json(const json& doc) {
  LearningCurve c;
  c.metric = parse_metric(doc.at("metric").get<std::string>());
  c.config_fingerprint = doc.at("config_fingerprint").get<std::string>();
  c.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
  c.truncated = doc.value("truncated", false);
  c.truncation_reason = doc.value("truncation_reason", std::string{});
  for (const auto& p : doc.at("points")) {
    CurvePoint pt;
    pt.labeled_count = p.at("labeled_count").get<std::size_t>();
    pt.score = p.at("score").get<double>();
    pt.pseudo_count = p.at("pseudo_count").get<std::size_t>();
    pt.query_ids = p.at("query_ids").get<std::vector<InstanceId>>();
    if (auto it = p.find("self_training"); it != p.end())
      for (const auto& r : *it) pt.self_training.push_back(round_from_json(r));
    c.points.push_back(std::move(pt));
  }
  return c;
}

std::string LearningCurve::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "labeled_count,score,pseudo_count\n";
  for (const auto& p : points) out << p.labeled_count << ',' << p.score << ',' << p.pseudo_count << '\n';
  return out.str();
}

double auc(const LearningCurve& curve) {
  std::vector<double> x, y;
  for (const auto& p : curve.points) {
    x.push_back(static_cast<double>(p.labeled_count));
    y.push_back(p.score);
  }
  return auc(x, y);
}

json RunAggregate::to_json() const {
  json doc{{"runs", curves.size()},
           {"single_run", single_run},
           {"final_score", {{"mean", final_score.mean}, {"std", final_score.std}}},
           {"labeled_counts", labeled_counts},
           {"mean_scores", mean_scores},
           {"std_scores", std_scores},
           {"mean_pseudo_counts", mean_pseudo_counts},
           {"seeds", json::array()}};
  if (labeled_counts.size() >= 2)
    doc["auc"] = {{"mean", area_under_curve.mean}, {"std", area_under_curve.std}};
  else
    doc["auc"] = nullptr;
  if (!curves.empty()) {
    doc["metric"] = hast::to_string(curves.front().metric);
    doc["config_fingerprint"] = curves.front().config_fingerprint;
  }
  for (const auto& c : curves) doc["seeds"].push_back(c.rng_seed);
  return doc;
}

RunAggregate aggregate_runs(std::vector<LearningCurve> curves) {
  if (curves.empty()) throw std::invalid_argument("aggregate_runs needs at least one curve");
  const auto& first = curves.front();
  for (const auto& c : curves) {
    if (c.config_fingerprint != first.config_fingerprint)
      throw std::invalid_argument("curves come from different configurations (" +
                                  first.config_fingerprint + " vs " + c.config_fingerprint + ")");
    if (c.points.size() != first.points.size() || c.points.empty())
      throw std::invalid_argument("curves have different numbers of points");
  }

  RunAggregate agg;
  const std::size_t n = curves.size();
  const std::size_t points = first.points.size();
  std::vector<double> finals, areas;
  for (const auto& c : curves) {
    finals.push_back(c.final_score());
    if (points >= 2) areas.push_back(auc(c));
  }
  agg.final_score = mean_std(finals);
  if (!areas.empty()) agg.area_under_curve = mean_std(areas);
  for (std::size_t i = 0; i < points; ++i) {
    std::vector<double> scores;
    double pseudo = 0.0;
    for (const auto& c : curves) {
      scores.push_back(c.points[i].score);
      pseudo += static_cast<double>(c.points[i].pseudo_count);
    }
    const auto ms = mean_std(scores);
    agg.labeled_counts.push_back(first.points[i].labeled_count);
    agg.mean_scores.push_back(ms.mean);
    agg.std_scores.push_back(ms.std);
    agg.mean_pseudo_counts.push_back(pseudo / static_cast<double>(n));
  }
  agg.single_run = n == 1;
  if (agg.single_run) spdlog::warn("aggregate over a single run: standard deviations are 0");
  agg.curves = std::move(curves);
  return agg;
}

Label simulated_oracle(const Instance& instance, int num_classes, double noise, Rng& rng) {
  if (noise <= 0.0 || num_classes < 2) return instance.true_label;
  std::bernoulli_distribution flip(noise);
  if (!flip(rng)) return instance.true_label;
  std::uniform_int_distribution<int> other(0, num_classes - 2);
  const int draw = other(rng);
  return draw >= instance.true_label ? draw + 1 : draw;
}

SimulatedOracle::SimulatedOracle(double noise, std::uint64_t seed, bool noise_on_seed)
    : noise_(noise), noise_on_seed_(noise_on_seed), rng_(seed) {}

std::optional<std::vector<Label>> SimulatedOracle::answer(const Dataset& dataset,
                                                          std::span<const InstanceId> ids,
                                                          std::size_t batch_index) {
  const double noise = batch_index == 0 && !noise_on_seed_ ? 0.0 : noise_;
  std::vector<Label> labels;
  labels.reserve(ids.size());
  for (InstanceId id : ids)
    labels.push_back(simulated_oracle(dataset.train_instance(id), dataset.num_classes, noise, rng_));
  return labels;
}

std::uint64_t oracle_seed(std::uint64_t rng_seed) { return rng_seed ^ 0x9e3779b97f4a7c15ULL; }

ActiveLearner::ActiveLearner(const Dataset& dataset, ExperimentConfig config)
    : dataset_(&dataset),
      config_(std::move(config)),
      rng_(config_.rng_seed),
      pool_(PoolState::all_unlabeled(dataset)) {
  validate(config_, dataset);
  if (dataset.test.empty()) throw ConfigError("dataset '" + dataset.name + "' has no test split");
  curve_.metric = dataset.metric;
  curve_.config_fingerprint = fingerprint(config_);
  curve_.rng_seed = config_.rng_seed;
  pending_.ids = draw_seed_ids(dataset, config_.seed_size, rng_, config_.stratified_seed);
  pending_.scores.assign(pending_.ids.size(), 0.0);
}

void ActiveLearner::submit(std::span<const Label> labels, const PhaseObserver& observer) {
  if (phase_ != Phase::AwaitingLabels) throw std::logic_error("learner is not awaiting labels");
  if (labels.size() != pending_.ids.size())
    throw std::invalid_argument("expected " + std::to_string(pending_.ids.size()) + " labels, got " +
                                std::to_string(labels.size()));
  for (Label l : labels)
    if (l < 0 || l >= dataset_->num_classes)
      throw std::invalid_argument("label " + std::to_string(l) + " out of range");

  auto enter = [&](Phase p) {
    phase_ = p;
    if (observer) observer(p);
  };

  for (std::size_t i = 0; i < labels.size(); ++i) pool_.add_human(pending_.ids[i], labels[i]);

  enter(Phase::Training);
  ProbModel trained = train_on_pool(*dataset_, pool_, uniform_weights(pool_.labeled().size()), config_);

  CurvePoint point;
  point.query_ids = pending_.ids;
  point.labeled_count = pool_.human_count();
  if (batch_index_ > 0 && config_.self_training != SelfTrainingMethod::None) {
    enter(Phase::SelfTraining);
    SelfTrainResult st = self_train(*dataset_, pool_, trained, config_, rng_);
    point.pseudo_count = st.pseudo_count();
    point.self_training = std::move(st.rounds);
    model_ = std::move(st.model);
  } else {
    model_ = trained;
  }
  query_model_ = config_.query_with_self_trained ? *model_ : trained;

  enter(Phase::Evaluating);
  point.score = evaluate(*model_, dataset_->test, dataset_->metric);
  curve_.points.push_back(std::move(point));

  if (batch_index_ == config_.num_queries || pool_.unlabeled().empty()) {
    pending_ = {};
    enter(Phase::Done);
    return;
  }
  pending_ = query(config_, *query_model_, *dataset_, pool_, rng_);
  ++batch_index_;
  enter(Phase::AwaitingLabels);
}

void ActiveLearner::truncate(const std::string& reason) {
  curve_.truncated = true;
  curve_.truncation_reason = reason;
  pending_ = {};
  phase_ = Phase::Done;
}

LearningCurve run_active_learning(const Dataset& dataset, const ExperimentConfig& config,
                                  Oracle& oracle) {
  ActiveLearner learner(dataset, config);
  while (learner.phase() == Phase::AwaitingLabels) {
    auto labels = oracle.answer(dataset, learner.pending().ids, learner.batch_index());
    if (!labels) {
      learner.truncate("oracle aborted at batch " + std::to_string(learner.batch_index()));
      break;
    }
    learner.submit(*labels);
  }
  return learner.curve();
}

LearningCurve run_active_learning(const Dataset& dataset, const ExperimentConfig& config) {
  SimulatedOracle oracle(config.label_noise, oracle_seed(config.rng_seed), config.noise_on_seed);
  return run_active_learning(dataset, config, oracle);
}

}  // namespace hast
