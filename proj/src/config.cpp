#include "hast/config.hpp"

#include <cstdio>
#include <set>

namespace hast {

using nlohmann::json;

std::string to_string(QueryStrategy s) {
  switch (s) {
    case QueryStrategy::Random: return "random";
    case QueryStrategy::BreakingTies: return "breaking-ties";
    case QueryStrategy::ContrastivePredictions: return "contrastive-predictions";
  }
  return "?";
}

std::string to_string(SelfTrainingMethod m) {
  switch (m) {
    case SelfTrainingMethod::None: return "none";
    case SelfTrainingMethod::HAST: return "hast";
    case SelfTrainingMethod::VERIPS: return "verips";
    case SelfTrainingMethod::Threshold: return "threshold";
  }
  return "?";
}

std::string to_string(ModelKind k) {
  return k == ModelKind::LogisticRegression ? "logistic-regression" : "nearest-centroid";
}

QueryStrategy parse_query_strategy(const std::string& name) {
  if (name == "random") return QueryStrategy::Random;
  if (name == "breaking-ties") return QueryStrategy::BreakingTies;
  if (name == "contrastive-predictions") return QueryStrategy::ContrastivePredictions;
  throw ConfigError("unknown query strategy '" + name +
                    "' (valid: random, breaking-ties, contrastive-predictions)");
}

SelfTrainingMethod parse_self_training(const std::string& name) {
  if (name == "none") return SelfTrainingMethod::None;
  if (name == "hast") return SelfTrainingMethod::HAST;
  if (name == "verips") return SelfTrainingMethod::VERIPS;
  if (name == "threshold") return SelfTrainingMethod::Threshold;
  throw ConfigError("unknown self-training method '" + name +
                    "' (valid: none, hast, verips, threshold)");
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "logistic-regression") return ModelKind::LogisticRegression;
  if (name == "nearest-centroid") return ModelKind::NearestCentroid;
  throw ConfigError("unknown classifier '" + name +
                    "' (valid: logistic-regression, nearest-centroid)");
}

json to_json(const ExperimentConfig& c) {
  return json{
      {"seed_size", c.seed_size},
      {"num_queries", c.num_queries},
      {"batch_size", c.batch_size},
      {"query_strategy", to_string(c.query_strategy)},
      {"self_training", to_string(c.self_training)},
      {"k", c.k},
      {"beta", c.beta},
      {"self_train_iterations", c.self_train_iterations},
      {"subsample_size", c.subsample_size},
      {"label_noise", c.label_noise},
      {"rng_seed", c.rng_seed},
      {"num_runs", c.num_runs},
      {"classifier",
       {{"kind", to_string(c.classifier.kind)},
        {"learning_rate", c.classifier.learning_rate},
        {"epochs", c.classifier.epochs},
        {"temperature", c.classifier.temperature}}},
      {"m_neighbors", c.m_neighbors},
      {"verips_threshold", c.verips_threshold},
      {"class_weighting", c.class_weighting},
      {"dynamic_beta", c.dynamic_beta},
      {"stratified_seed", c.stratified_seed},
      {"noise_on_seed", c.noise_on_seed},
      {"query_with_self_trained", c.query_with_self_trained},
      {"reveal_predictions", c.reveal_predictions},
  };
}

namespace {

template <typename T>
void read(const json& doc, const char* key, T& out) {
  auto it = doc.find(key);
  if (it == doc.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& doc, const std::set<std::string>& known, const char* where) {
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) throw ConfigError(std::string("unknown ") + where + " field '" + key + "'");
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc,
                 {"seed_size", "num_queries", "batch_size", "query_strategy", "self_training", "k",
                  "beta", "self_train_iterations", "subsample_size", "label_noise", "rng_seed",
                  "num_runs", "classifier", "m_neighbors", "verips_threshold", "class_weighting",
                  "dynamic_beta", "stratified_seed", "noise_on_seed", "query_with_self_trained",
                  "reveal_predictions"},
                 "config");
  ExperimentConfig c;
  read(doc, "seed_size", c.seed_size);
  read(doc, "num_queries", c.num_queries);
  read(doc, "batch_size", c.batch_size);
  std::string name;
  if (doc.contains("query_strategy")) {
    read(doc, "query_strategy", name);
    c.query_strategy = parse_query_strategy(name);
  }
  if (doc.contains("self_training")) {
    read(doc, "self_training", name);
    c.self_training = parse_self_training(name);
  }
  read(doc, "k", c.k);
  read(doc, "beta", c.beta);
  read(doc, "self_train_iterations", c.self_train_iterations);
  read(doc, "subsample_size", c.subsample_size);
  read(doc, "label_noise", c.label_noise);
  read(doc, "rng_seed", c.rng_seed);
  read(doc, "num_runs", c.num_runs);
  if (auto it = doc.find("classifier"); it != doc.end()) {
    if (!it->is_object()) throw ConfigError("config field 'classifier' must be an object");
    reject_unknown(*it, {"kind", "learning_rate", "epochs", "temperature"}, "classifier");
    if (it->contains("kind")) {
      read(*it, "kind", name);
      c.classifier.kind = parse_model_kind(name);
    }
    read(*it, "learning_rate", c.classifier.learning_rate);
    read(*it, "epochs", c.classifier.epochs);
    read(*it, "temperature", c.classifier.temperature);
  }
  read(doc, "m_neighbors", c.m_neighbors);
  read(doc, "verips_threshold", c.verips_threshold);
  read(doc, "class_weighting", c.class_weighting);
  read(doc, "dynamic_beta", c.dynamic_beta);
  read(doc, "stratified_seed", c.stratified_seed);
  read(doc, "noise_on_seed", c.noise_on_seed);
  read(doc, "query_with_self_trained", c.query_with_self_trained);
  read(doc, "reveal_predictions", c.reveal_predictions);
  validate(c);
  return c;
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(c.seed_size >= 1, "seed_size must be >= 1");
  require(c.batch_size >= 1, "batch_size must be >= 1");
  require(c.k >= 1, "k must be >= 1");
  require(c.beta > 0.0 && c.beta <= 1.0, "beta must lie in (0, 1]");
  require(c.self_train_iterations >= 1, "self_train_iterations must be >= 1");
  require(c.subsample_size >= 1, "subsample_size must be >= 1");
  require(c.label_noise >= 0.0 && c.label_noise < 1.0, "label_noise must lie in [0, 1)");
  require(c.num_runs >= 1, "num_runs must be >= 1");
  require(c.m_neighbors >= 1, "m_neighbors must be >= 1");
  require(c.verips_threshold >= 0.0 && c.verips_threshold <= 1.0,
          "verips_threshold must lie in [0, 1]");
  require(c.classifier.learning_rate > 0.0, "classifier.learning_rate must be positive");
  require(c.classifier.epochs >= 1, "classifier.epochs must be >= 1");
  require(c.classifier.temperature > 0.0, "classifier.temperature must be positive");
}

void validate(const ExperimentConfig& c, const Dataset& dataset) {
  validate(c);
  const std::size_t budget = c.seed_size + c.num_queries * c.batch_size;
  if (budget > dataset.train.size())
    throw ConfigError("labeling budget seed_size + num_queries * batch_size = " +
                      std::to_string(budget) + " exceeds the training set size " +
                      std::to_string(dataset.train.size()));
}

std::string fingerprint(const ExperimentConfig& config) {
  json doc = to_json(config);
  doc.erase("rng_seed");
  doc.erase("num_runs");
  const std::string text = doc.dump();
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hast
