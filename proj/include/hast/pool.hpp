#pragma once

#include <set>
#include <vector>

#include "hast/dataset.hpp"

namespace hast {

enum class Provenance { Human, Pseudo };

struct LabelRecord {
  InstanceId id = 0;
  Label label = 0;
  Provenance provenance = Provenance::Human;
  double raw_weight = 1.0;

  bool operator==(const LabelRecord&) const = default;
};

// Disjoint labeled/unlabeled partition of a dataset's training ids.
class PoolState {
 public:
  PoolState() = default;
  explicit PoolState(std::set<InstanceId> unlabeled) : unlabeled_(std::move(unlabeled)) {}

  // Every training id of `dataset` unlabeled.
  static PoolState all_unlabeled(const Dataset& dataset);

  const std::vector<LabelRecord>& labeled() const { return labeled_; }
  const std::set<InstanceId>& unlabeled() const { return unlabeled_; }
  std::vector<InstanceId> unlabeled_ids() const { return {unlabeled_.begin(), unlabeled_.end()}; }

  bool is_unlabeled(InstanceId id) const { return unlabeled_.count(id) != 0; }
  std::size_t size() const { return labeled_.size() + unlabeled_.size(); }
  std::size_t human_count() const;
  std::size_t pseudo_count() const { return labeled_.size() - human_count(); }

  // Moves `id` from U to L. Throws std::logic_error if `id` is not unlabeled.
  void add_human(InstanceId id, Label label);
  void add_pseudo(InstanceId id, Label label, double raw_weight);
  void set_raw_weight(std::size_t record_index, double raw_weight);

  // Copy keeping only Human records; pseudo-labeled ids return to U.
  PoolState human_only() const;

  bool operator==(const PoolState&) const = default;

 private:
  void move_to_labeled(LabelRecord record);

  std::vector<LabelRecord> labeled_;
  std::set<InstanceId> unlabeled_;
};

// Uniform draw of `seed_size` training ids without replacement, or a
// class-stratified draw (round-robin over classes) when `stratified` is set.
std::vector<InstanceId> draw_seed_ids(const Dataset& dataset, std::size_t seed_size, Rng& rng,
                                      bool stratified = false);

// Seed set labeled with ground truth as Human records, remainder unlabeled.
PoolState init_pools(const Dataset& dataset, std::size_t seed_size, std::uint64_t rng_seed);

// min(n, |U|) distinct unlabeled ids, ascending.
std::vector<InstanceId> subsample_unlabeled(const PoolState& pool, std::size_t n, Rng& rng);

}  // namespace hast
