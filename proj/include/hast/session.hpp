#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hast/engine.hpp"

namespace hast {

// Error carrying the HTTP status it maps to (404, 409, 422).
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class DatasetRegistry {
 public:
  void add(const std::string& name, std::shared_ptr<const Dataset> dataset);
  std::shared_ptr<const Dataset> find(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
};

struct LabelAck {
  std::size_t accepted = 0;
  std::size_t remaining = 0;
};

struct CreateResult {
  std::string session_id;
  bool created = true;  // false when an idempotency key matched an existing session
};

struct SessionOptions {
  std::filesystem::path data_dir = "hast-data";
  // Run train/self-train/evaluate on a worker thread after a batch completes.
  bool asynchronous = true;
  // Ground-truth-style labels used to answer the seed batch automatically.
  std::map<InstanceId, Label> seed_labels;
};

// Live annotation sessions. Every session is an append-only JSON event log
// under <data_dir>/sessions/<id>/events.jsonl; constructing a manager over an
// existing directory replays those logs to rebuild each session.
class SessionManager {
 public:
  SessionManager(DatasetRegistry registry, SessionOptions options);
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  CreateResult create_session(const std::string& dataset, const ExperimentConfig& config,
                              const std::optional<std::string>& idempotency_key = {});

  // {ids, texts, batch_index, submitted, predictions?}. 409 outside AwaitingLabels.
  nlohmann::json get_query_batch(const std::string& session_id) const;

  // Accepts a partial or complete batch atomically; completing the batch
  // starts the next engine step.
  LabelAck submit_labels(const std::string& session_id,
                         const std::vector<std::pair<InstanceId, Label>>& labels);

  // {session_id, phase, curve, pseudo_counts, config, dataset, summary}
  nlohmann::json get_session_metrics(const std::string& session_id) const;

  // Metrics plus the curve CSV.
  nlohmann::json export_session(const std::string& session_id) const;

  Phase phase(const std::string& session_id) const;
  // Blocks until the session is AwaitingLabels or Done.
  void wait_idle(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;

  std::filesystem::path session_dir(const std::string& session_id) const;

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& session_id) const;
  std::shared_ptr<Session> open_session(const std::string& id, const std::string& dataset,
                                        const ExperimentConfig& config,
                                        const std::optional<std::string>& key);
  void replay(const std::filesystem::path& events_file);
  LabelAck apply_labels(Session& s, const std::vector<std::pair<InstanceId, Label>>& labels,
                        bool replaying, std::unique_lock<std::mutex>& lock);
  void advance(const std::shared_ptr<Session>& s, std::vector<Label> labels, bool replaying);

  DatasetRegistry registry_;
  SessionOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::string> idempotency_;
};

}  // namespace hast
