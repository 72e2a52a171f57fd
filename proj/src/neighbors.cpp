#include "hast/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hast {

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine distance of unequal dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 1.0;
  return 1.0 - dot / std::sqrt(na * nb);
}

void ReferenceSet::add(InstanceId id, std::span<const double> point, Label label) {
  ids.push_back(id);
  points.push_back(point);
  labels.push_back(label);
}

ReferenceSet reference_from_pool(const Dataset& dataset, const PoolState& pool) {
  ReferenceSet refs;
  for (const auto& r : pool.labeled())
    refs.add(r.id, dataset.train_instance(r.id).embedding, r.label);
  return refs;
}

std::vector<Neighbor> nearest(std::span<const double> query, const ReferenceSet& refs,
                              std::size_t k) {
  std::vector<Neighbor> all(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) all[i] = {i, cosine_distance(query, refs.points[i])};
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    [&](const Neighbor& a, const Neighbor& b) {
                      if (a.distance != b.distance) return a.distance < b.distance;
                      return refs.ids[a.index] < refs.ids[b.index];
                    });
  all.resize(take);
  return all;
}

}  // namespace hast
