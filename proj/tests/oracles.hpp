#pragma once

// Independent reference implementations the tests compare against.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "hast/classifier.hpp"
#include "hast/dataset.hpp"
#include "hast/pool.hpp"

namespace hast::oracle {

inline long double alpha_reference(long double h, long double N, long double C) {
  const long double z = (N / C - h) / std::max(1.0L, h);
  return 10.0L / (1.0L + std::exp(-z));
}

// Full sort by (cosine distance, id), majority, then mean distance, then
// lowest class.
inline Label brute_knn(const std::vector<double>& x, const Dataset& ds, const PoolState& pool,
                       std::size_t k) {
  struct Ref {
    double dist;
    InstanceId id;
    Label label;
  };
  std::vector<Ref> refs;
  for (const auto& r : pool.labeled()) {
    const auto& y = ds.train_instance(r.id).embedding;
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      dot += x[j] * y[j];
      nx += x[j] * x[j];
      ny += y[j] * y[j];
    }
    refs.push_back({1.0 - dot / std::sqrt(nx * ny), r.id, r.label});
  }
  std::sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
  });
  refs.resize(std::min(k, refs.size()));
  std::map<Label, std::pair<int, double>> tally;
  for (const auto& r : refs) {
    ++tally[r.label].first;
    tally[r.label].second += r.dist;
  }
  Label best = -1;
  int best_votes = 0;
  double best_mean = 0.0;
  for (const auto& [label, vd] : tally) {
    const double mean = vd.second / vd.first;
    if (vd.first > best_votes || (vd.first == best_votes && mean < best_mean)) {
      best = label;
      best_votes = vd.first;
      best_mean = mean;
    }
  }
  return best;
}

// {x in U : s(x) > 0.5 and knn(x) = argmax}, evaluated instance by instance.
inline std::set<InstanceId> brute_selection(const ProbModel& model, const Dataset& ds,
                                      const PoolState& pool, std::size_t k) {
  std::set<InstanceId> out;
  for (InstanceId id : pool.unlabeled()) {
    const auto& x = ds.train_instance(id).embedding;
    const auto proba = model.predict_proba(x);
    std::size_t top = 0;
    for (std::size_t c = 1; c < proba.size(); ++c)
      if (proba[c] > proba[top]) top = c;
    if (proba[top] > 0.5 && brute_knn(x, ds, pool, k) == static_cast<Label>(top)) out.insert(id);
  }
  return out;
}

struct Problem {
  std::size_t d = 0;
  int C = 0;
  std::vector<std::vector<double>> xs;
  std::vector<Label> ys;
  std::vector<double> ws;

  std::vector<WeightedExample> examples() const {
    std::vector<WeightedExample> out;
    for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({xs[i], ys[i], ws[i]});
    return out;
  }
};

inline Problem random_problem(Rng& rng, std::size_t d, int C, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.1, 1.0);
  Problem p;
  p.d = d;
  p.C = C;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(d);
    for (auto& v : x) v = normal(rng);
    p.xs.push_back(x);
    p.ys.push_back(static_cast<Label>(rng() % static_cast<unsigned>(C)));
    p.ws.push_back(unit(rng));
  }
  return p;
}

inline std::vector<double> random_params(Rng& rng, const Problem& p) {
  std::normal_distribution<double> normal(0.0, 0.5);
  std::vector<double> params(static_cast<std::size_t>(p.C) * p.d + static_cast<std::size_t>(p.C));
  for (auto& v : params) v = normal(rng);
  return params;
}

// sum_i w_i * -log softmax(A x_i + b)[y_i] in long double.
inline long double reference_loss(const std::vector<double>& params, const Problem& p) {
  const auto C = static_cast<std::size_t>(p.C);
  long double total = 0.0L;
  for (std::size_t i = 0; i < p.xs.size(); ++i) {
    std::vector<long double> z(C);
    for (std::size_t c = 0; c < C; ++c) {
      long double s = params[C * p.d + c];
      for (std::size_t j = 0; j < p.d; ++j) s += params[c * p.d + j] * p.xs[i][j];
      z[c] = s;
    }
    long double mx = z[0];
    for (auto v : z) mx = std::max(mx, v);
    long double norm = 0.0L;
    for (auto v : z) norm += std::exp(v - mx);
    total += p.ws[i] * (std::log(norm) + mx - z[static_cast<std::size_t>(p.ys[i])]);
  }
  return total;
}

// Worst relative error of `gradient` against central differences of reference_loss.
inline double gradient_error(std::vector<double> params, const Problem& p,
                             const std::vector<double>& gradient) {
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + h;
    const long double up = reference_loss(params, p);
    params[k] = saved - h;
    const long double down = reference_loss(params, p);
    params[k] = saved;
    const double numeric = static_cast<double>((up - down) / (2 * h));
    const double rel = std::abs(numeric - gradient[k]) /
                       std::max(1e-8, std::abs(numeric) + std::abs(gradient[k]));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace hast::oracle
