#include "hast/session.hpp"

#include <condition_variable>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "hast/metrics.hpp"

namespace hast {

using nlohmann::json;
namespace fs = std::filesystem;

void DatasetRegistry::add(const std::string& name, std::shared_ptr<const Dataset> dataset) {
  datasets_[name] = std::move(dataset);
}

std::shared_ptr<const Dataset> DatasetRegistry::find(const std::string& name) const {
  auto it = datasets_.find(name);
  return it == datasets_.end() ? nullptr : it->second;
}

std::vector<std::string> DatasetRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : datasets_) out.push_back(name);
  return out;
}

struct SessionManager::Session {
  Session(std::string id_, std::string dataset_name_, std::shared_ptr<const Dataset> dataset_,
          ExperimentConfig config_, std::optional<std::string> key_)
      : id(std::move(id_)),
        dataset_name(std::move(dataset_name_)),
        dataset(std::move(dataset_)),
        config(std::move(config_)),
        key(std::move(key_)),
        learner(*dataset, config) {}

  const std::string id;
  const std::string dataset_name;
  const std::shared_ptr<const Dataset> dataset;
  const ExperimentConfig config;
  const std::optional<std::string> key;
  // Mutated only by the thread running advance(); everything else reads it
  // while phase is AwaitingLabels or Done, or through the snapshot below.
  ActiveLearner learner;

  mutable std::mutex mu;
  mutable std::condition_variable idle;
  Phase phase = Phase::AwaitingLabels;
  std::map<InstanceId, Label> drafts;
  LearningCurve curve;
  std::string error;
  fs::path dir;
  std::ofstream log;
  std::thread worker;

  void refresh() { curve = learner.curve(); }

  void append(const json& event) {
    if (!log.is_open()) return;
    log << event.dump() << '\n';
    log.flush();
  }
};

namespace {

std::string random_session_id() {
  static std::mutex mu;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[20];
  std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(gen()));
  return buf;
}

json summary(const LearningCurve& curve) {
  json out{{"final_score", nullptr}, {"auc", nullptr}, {"labeled_count", 0}};
  if (!curve.points.empty()) {
    out["final_score"] = curve.final_score();
    out["labeled_count"] = curve.points.back().labeled_count;
  }
  if (curve.points.size() >= 2) out["auc"] = auc(curve);
  return out;
}

bool busy(Phase p) { return p != Phase::AwaitingLabels && p != Phase::Done; }

}  // namespace

SessionManager::SessionManager(DatasetRegistry registry, SessionOptions options)
    : registry_(std::move(registry)), options_(std::move(options)) {
  const fs::path root = options_.data_dir / "sessions";
  fs::create_directories(root);
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(root)) {
    const auto events = entry.path() / "events.jsonl";
    if (entry.is_directory() && fs::exists(events)) logs.push_back(events);
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& events : logs) {
    try {
      replay(events);
    } catch (const std::exception& e) {
      spdlog::warn("skipping session log {}: {}", events.string(), e.what());
    }
  }
}

SessionManager::~SessionManager() {
  std::lock_guard lock(mu_);
  for (auto& [_, s] : sessions_)
    if (s->worker.joinable()) s->worker.join();
}

fs::path SessionManager::session_dir(const std::string& session_id) const {
  return options_.data_dir / "sessions" / session_id;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + session_id + "'");
  return it->second;
}

std::shared_ptr<SessionManager::Session> SessionManager::open_session(
    const std::string& id, const std::string& dataset, const ExperimentConfig& config,
    const std::optional<std::string>& key) {
  auto ds = registry_.find(dataset);
  if (!ds) throw ServiceError(422, "unknown dataset '" + dataset + "'");
  std::shared_ptr<Session> s;
  try {
    validate(config, *ds);
    s = std::make_shared<Session>(id, dataset, ds, config, key);
  } catch (const std::invalid_argument& e) {
    throw ServiceError(422, e.what());
  }
  s->dir = session_dir(id);
  s->refresh();
  return s;
}

CreateResult SessionManager::create_session(const std::string& dataset,
                                            const ExperimentConfig& config,
                                            const std::optional<std::string>& idempotency_key) {
  std::unique_lock lock(mu_);
  if (idempotency_key) {
    if (auto it = idempotency_.find(*idempotency_key); it != idempotency_.end())
      return {it->second, false};
  }
  std::string id;
  do {
    id = random_session_id();
  } while (sessions_.count(id));
  auto s = open_session(id, dataset, config, idempotency_key);

  fs::create_directories(s->dir);
  s->log.open(s->dir / "events.jsonl", std::ios::app);
  json created{{"event", "created"}, {"session_id", id}, {"dataset", dataset},
               {"config", to_json(config)}};
  if (idempotency_key) created["idempotency_key"] = *idempotency_key;
  s->append(created);

  sessions_[id] = s;
  if (idempotency_key) idempotency_[*idempotency_key] = id;
  lock.unlock();

  if (!options_.seed_labels.empty()) {
    std::vector<std::pair<InstanceId, Label>> seed;
    for (InstanceId pid : s->learner.pending().ids) {
      auto it = options_.seed_labels.find(pid);
      if (it == options_.seed_labels.end()) {
        seed.clear();
        spdlog::info("seed-label file does not cover instance {}; seed batch left to the annotator", pid);
        break;
      }
      seed.emplace_back(pid, it->second);
    }
    if (!seed.empty()) submit_labels(id, seed);
  }
  return {id, true};
}

json SessionManager::get_query_batch(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (s->phase != Phase::AwaitingLabels)
    throw ServiceError(409, "session is in phase " + to_string(s->phase) + ", not AwaitingLabels");
  const auto& pending = s->learner.pending();
  json texts = json::array();
  for (InstanceId id : pending.ids) {
    const auto& inst = s->dataset->train_instance(id);
    texts.push_back(inst.text ? json(*inst.text) : json(nullptr));
  }
  json submitted = json::array();
  for (const auto& [id, _] : s->drafts) submitted.push_back(id);
  json out{{"session_id", s->id},
           {"ids", pending.ids},
           {"texts", texts},
           {"batch_index", s->learner.batch_index()},
           {"num_classes", s->dataset->num_classes},
           {"submitted", submitted}};
  if (s->config.reveal_predictions && s->learner.query_model()) {
    json preds = json::array();
    for (InstanceId id : pending.ids) {
      const auto p = s->learner.query_model()->predict(s->dataset->train_instance(id).embedding);
      preds.push_back({{"label", p.label}, {"confidence", p.confidence}});
    }
    out["predictions"] = preds;
  }
  return out;
}

LabelAck SessionManager::submit_labels(const std::string& session_id,
                                       const std::vector<std::pair<InstanceId, Label>>& labels) {
  auto s = find(session_id);
  std::unique_lock lock(s->mu);
  return apply_labels(*s, labels, false, lock);
}

LabelAck SessionManager::apply_labels(Session& s,
                                      const std::vector<std::pair<InstanceId, Label>>& labels,
                                      bool replaying, std::unique_lock<std::mutex>& lock) {
  if (s.phase != Phase::AwaitingLabels)
    throw ServiceError(409, "session is in phase " + to_string(s.phase) + ", not AwaitingLabels");
  if (labels.empty()) throw ServiceError(422, "no labels submitted");
  const auto& pending = s.learner.pending().ids;
  const std::set<InstanceId> pending_set(pending.begin(), pending.end());
  std::set<InstanceId> seen;
  for (const auto& [id, label] : labels) {
    if (!pending_set.count(id))
      throw ServiceError(422, "instance " + std::to_string(id) + " is not in the pending batch");
    if (label < 0 || label >= s.dataset->num_classes)
      throw ServiceError(422, "label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(s.dataset->num_classes) + ")");
    if (s.drafts.count(id) || !seen.insert(id).second)
      throw ServiceError(409, "instance " + std::to_string(id) + " was already labeled");
  }

  if (!replaying) {
    json pairs = json::array();
    for (const auto& [id, label] : labels) pairs.push_back({id, label});
    s.append({{"event", "labels"}, {"batch_index", s.learner.batch_index()}, {"labels", pairs}});
  }
  for (const auto& [id, label] : labels) s.drafts[id] = label;

  LabelAck ack{labels.size(), pending.size() - s.drafts.size()};
  if (ack.remaining > 0) return ack;

  std::vector<Label> ordered;
  ordered.reserve(pending.size());
  for (InstanceId id : pending) ordered.push_back(s.drafts.at(id));
  s.drafts.clear();
  s.phase = Phase::Training;

  std::shared_ptr<Session> self;
  {
    std::lock_guard g(mu_);
    self = sessions_.count(s.id) ? sessions_.at(s.id) : nullptr;
  }
  if (options_.asynchronous && !replaying && self) {
    if (s.worker.joinable()) s.worker.join();
    s.worker = std::thread([this, self, ordered = std::move(ordered)]() mutable {
      advance(self, std::move(ordered), false);
    });
  } else {
    lock.unlock();
    advance(self, std::move(ordered), replaying);
    lock.lock();
  }
  return ack;
}

void SessionManager::advance(const std::shared_ptr<Session>& s, std::vector<Label> labels,
                             bool replaying) {
  auto observer = [&](Phase p) {
    std::lock_guard lock(s->mu);
    s->phase = p;
    s->refresh();
    if (busy(p)) return;
    if (!replaying && s->learner.model()) {
      std::ofstream snap(s->dir / ("model_" + std::to_string(s->curve.points.size() - 1) + ".json"));
      snap << s->learner.model()->to_json().dump() << '\n';
    }
    s->idle.notify_all();
  };
  try {
    s->learner.submit(labels, observer);
  } catch (const std::exception& e) {
    spdlog::error("session {}: engine step failed: {}", s->id, e.what());
    std::lock_guard lock(s->mu);
    s->learner.truncate(std::string("engine error: ") + e.what());
    s->error = e.what();
    s->phase = Phase::Done;
    s->refresh();
    s->idle.notify_all();
  }
}

void SessionManager::replay(const fs::path& events_file) {
  std::ifstream in(events_file);
  std::string line;
  std::shared_ptr<Session> s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json event = json::parse(line);
    const std::string type = event.at("event").get<std::string>();
    if (type == "created") {
      std::optional<std::string> key;
      if (event.contains("idempotency_key")) key = event.at("idempotency_key").get<std::string>();
      s = open_session(event.at("session_id").get<std::string>(),
                       event.at("dataset").get<std::string>(),
                       config_from_json(event.at("config")), key);
      std::lock_guard g(mu_);
      sessions_[s->id] = s;
      if (key) idempotency_[*key] = s->id;
    } else if (type == "labels") {
      if (!s) throw std::runtime_error("labels event before session creation");
      std::vector<std::pair<InstanceId, Label>> labels;
      for (const auto& pair : event.at("labels"))
        labels.emplace_back(pair.at(0).get<InstanceId>(), pair.at(1).get<Label>());
      std::unique_lock lock(s->mu);
      apply_labels(*s, labels, true, lock);
    } else {
      throw std::runtime_error("unknown event type '" + type + "'");
    }
  }
  if (!s) throw std::runtime_error("empty event log");
  s->log.open(events_file, std::ios::app);
}

Phase SessionManager::phase(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return s->phase;
}

void SessionManager::wait_idle(const std::string& session_id) const {
  auto s = find(session_id);
  std::unique_lock lock(s->mu);
  s->idle.wait(lock, [&] { return !busy(s->phase); });
}

std::vector<std::string> SessionManager::session_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

json SessionManager::get_session_metrics(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  json pseudo = json::array();
  for (const auto& p : s->curve.points) pseudo.push_back(p.pseudo_count);
  json out{{"session_id", s->id},
           {"phase", to_string(s->phase)},
           {"dataset", s->dataset_name},
           {"num_classes", s->dataset->num_classes},
           {"config", to_json(s->config)},
           {"curve", s->curve.to_json()},
           {"pseudo_counts", pseudo},
           {"summary", summary(s->curve)}};
  if (!s->error.empty()) out["error"] = s->error;
  return out;
}

json SessionManager::export_session(const std::string& session_id) const {
  json out = get_session_metrics(session_id);
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  out["csv"] = s->curve.to_csv();
  return out;
}

}  // namespace hast
