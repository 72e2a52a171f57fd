#include "hast/pool.hpp"

#include <algorithm>
#include <iterator>
#include <stdexcept>
#include <string>

namespace hast {

PoolState PoolState::all_unlabeled(const Dataset& dataset) {
  std::set<InstanceId> ids;
  for (const auto& inst : dataset.train) ids.insert(inst.id);
  return PoolState(std::move(ids));
}

std::size_t PoolState::human_count() const {
  return static_cast<std::size_t>(std::count_if(labeled_.begin(), labeled_.end(), [](const auto& r) {
    return r.provenance == Provenance::Human;
  }));
}

void PoolState::move_to_labeled(LabelRecord record) {
  auto it = unlabeled_.find(record.id);
  if (it == unlabeled_.end())
    throw std::logic_error("instance " + std::to_string(record.id) + " is not in the unlabeled pool");
  unlabeled_.erase(it);
  labeled_.push_back(record);
}

void PoolState::add_human(InstanceId id, Label label) {
  move_to_labeled({id, label, Provenance::Human, 1.0});
}

void PoolState::add_pseudo(InstanceId id, Label label, double raw_weight) {
  if (!(raw_weight > 0.0)) throw std::invalid_argument("pseudo-label weight must be positive");
  move_to_labeled({id, label, Provenance::Pseudo, raw_weight});
}

void PoolState::set_raw_weight(std::size_t record_index, double raw_weight) {
  auto& record = labeled_.at(record_index);
  if (record.provenance == Provenance::Human)
    throw std::logic_error("human label weights are fixed at 1.0");
  if (!(raw_weight > 0.0)) throw std::invalid_argument("pseudo-label weight must be positive");
  record.raw_weight = raw_weight;
}

PoolState PoolState::human_only() const {
  PoolState out;
  out.unlabeled_ = unlabeled_;
  for (const auto& r : labeled_) {
    if (r.provenance == Provenance::Human)
      out.labeled_.push_back(r);
    else
      out.unlabeled_.insert(r.id);
  }
  return out;
}

std::vector<InstanceId> draw_seed_ids(const Dataset& dataset, std::size_t seed_size, Rng& rng,
                                      bool stratified) {
  const std::size_t n = dataset.train.size();
  if (seed_size > n)
    throw std::invalid_argument("seed size " + std::to_string(seed_size) +
                                " exceeds the training pool of " + std::to_string(n));
  std::vector<InstanceId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = dataset.train[i].id;
  std::shuffle(ids.begin(), ids.end(), rng);
  if (!stratified) {
    ids.resize(seed_size);
    return ids;
  }

  std::vector<std::vector<InstanceId>> by_class(static_cast<std::size_t>(dataset.num_classes));
  for (InstanceId id : ids)
    by_class[static_cast<std::size_t>(dataset.train_instance(id).true_label)].push_back(id);
  std::vector<InstanceId> out;
  for (std::size_t round = 0; out.size() < seed_size; ++round) {
    for (const auto& bucket : by_class) {
      if (round < bucket.size() && out.size() < seed_size) out.push_back(bucket[round]);
    }
  }
  return out;
}

PoolState init_pools(const Dataset& dataset, std::size_t seed_size, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  PoolState pool = PoolState::all_unlabeled(dataset);
  for (InstanceId id : draw_seed_ids(dataset, seed_size, rng))
    pool.add_human(id, dataset.train_instance(id).true_label);
  return pool;
}

std::vector<InstanceId> subsample_unlabeled(const PoolState& pool, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("subsample size must be at least 1");
  const auto& u = pool.unlabeled();
  if (n >= u.size()) return {u.begin(), u.end()};
  std::vector<InstanceId> out;
  out.reserve(n);
  std::sample(u.begin(), u.end(), std::back_inserter(out), n, rng);
  return out;
}

}  // namespace hast
