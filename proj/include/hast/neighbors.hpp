#pragma once

#include <span>
#include <vector>

#include "hast/pool.hpp"

namespace hast {

// 1 - cos(a, b). Zero vectors are treated as orthogonal to everything.
double cosine_distance(std::span<const double> a, std::span<const double> b);

// Labeled points searched by exact brute force.
struct ReferenceSet {
  std::vector<InstanceId> ids;
  std::vector<std::span<const double>> points;
  std::vector<Label> labels;

  std::size_t size() const { return ids.size(); }
  void add(InstanceId id, std::span<const double> point, Label label);
};

// Every labeled record of `pool` (human and pseudo), embeddings from `dataset`.
ReferenceSet reference_from_pool(const Dataset& dataset, const PoolState& pool);

struct Neighbor {
  std::size_t index = 0;  // position in the ReferenceSet
  double distance = 0.0;
};

// The min(k, |refs|) nearest references, ordered by (distance, id).
std::vector<Neighbor> nearest(std::span<const double> query, const ReferenceSet& refs,
                              std::size_t k);

}  // namespace hast
