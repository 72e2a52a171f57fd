#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hast/dataset.hpp"

namespace hast::testing {

inline Instance point(std::vector<double> x, Label y) {
  Instance inst;
  inst.embedding = std::move(x);
  inst.true_label = y;
  return inst;
}

// Small dataset from raw points; source ids follow position.
inline Dataset small_dataset(std::vector<Instance> train, std::vector<Instance> test,
                             int num_classes) {
  std::int64_t next = 0;
  for (auto& inst : train) inst.source_id = next++;
  for (auto& inst : test) inst.source_id = next++;
  LoadOptions opts;
  opts.name = "small";
  opts.num_classes = num_classes;
  return make_dataset(std::move(train), std::move(test), opts);
}

// Points on the unit circle at the given angles (degrees).
inline Instance at_angle(double degrees, Label y) {
  const double r = degrees * 3.14159265358979323846 / 180.0;
  return point({std::cos(r), std::sin(r)}, y);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("hast-test-" + name + "-" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Index of the centroid with the largest inner product. For centroids of
// equal norm this is the nearest centroid, and it is unchanged by rescaling x.
inline Label nearest_true_centroid(const std::vector<double>& x,
                                   const std::vector<std::vector<double>>& centroids) {
  Label best = 0;
  double best_dot = -1e300;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    double dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dot += x[j] * centroids[c][j];
    if (dot > best_dot) {
      best_dot = dot;
      best = static_cast<Label>(c);
    }
  }
  return best;
}

}  // namespace hast::testing

#include "hast/classifier.hpp"

namespace hast::testing {

// Dataset whose i-th training instance is the basis vector e_i, plus a
// logistic model whose prediction on e_i is exactly dists[i].
struct Scripted {
  Dataset dataset;
  ProbModel model;
};

inline Scripted scripted(const std::vector<std::vector<double>>& dists,
                         const std::vector<Label>& labels) {
  const std::size_t n = dists.size();
  const int C = static_cast<int>(dists.front().size());
  std::vector<Instance> train;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(n, 0.0);
    x[i] = 1.0;
    train.push_back(point(std::move(x), labels[i]));
  }
  std::vector<double> W(static_cast<std::size_t>(C) * n);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < C; ++c) {
      const double p = dists[i][static_cast<std::size_t>(c)];
      W[static_cast<std::size_t>(c) * n + i] = p > 0.0 ? std::log(p) : -1000.0;
    }
  return {small_dataset(std::move(train), {}, C),
          ProbModel::logistic(C, n, std::move(W), std::vector<double>(static_cast<std::size_t>(C), 0.0))};
}

}  // namespace hast::testing
