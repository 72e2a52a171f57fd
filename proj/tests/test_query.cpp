#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "hast/neighbors.hpp"
#include "hast/pool.hpp"
#include "hast/query.hpp"
#include "helpers.hpp"

using namespace hast;
using hast::testing::scripted;

namespace {

std::vector<InstanceId> all_ids(std::size_t n) {
  std::vector<InstanceId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<InstanceId>(i);
  return ids;
}

PoolState unlabeled_pool(std::size_t n) {
  std::set<InstanceId> u;
  for (std::size_t i = 0; i < n; ++i) u.insert(static_cast<InstanceId>(i));
  return PoolState(u);
}

}  // namespace

TEST_CASE("KL divergence") {
  const std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
  const double expected = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
  CHECK(kl_divergence(p, q) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(kl_divergence(p, q) == doctest::Approx(0.5108).epsilon(1e-4));
  CHECK(kl_divergence(q, q) == 0.0);
  CHECK(std::isfinite(kl_divergence(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0})));
}

TEST_CASE("margin") {
  CHECK(margin(std::vector<double>{0.5, 0.5}) == 0.0);
  CHECK(margin(std::vector<double>{0.9, 0.1}) == doctest::Approx(0.8));
  CHECK(margin(std::vector<double>{0.2, 0.3, 0.5}) == doctest::Approx(0.2));
  CHECK(margin(std::vector<double>{1.0}) == 1.0);
}

TEST_CASE("random query") {
  Rng rng(1);
  const PoolState small = unlabeled_pool(5);
  const auto all = query_random(small, 10, rng);
  CHECK(std::set<InstanceId>(all.ids.begin(), all.ids.end()).size() == 5);

  const PoolState big = unlabeled_pool(990);
  Rng a(7), b(7);
  const auto qa = query_random(big, 10, a);
  CHECK(qa == query_random(big, 10, b));
  CHECK(std::set<InstanceId>(qa.ids.begin(), qa.ids.end()).size() == 10);
  for (double s : qa.scores) CHECK(s == 0.0);
}

TEST_CASE("breaking ties picks the smallest margin") {
  auto s = scripted({{0.5, 0.5}, {0.9, 0.1}}, {0, 1});
  const auto q = query_breaking_ties(s.model, s.dataset, all_ids(2), 1);
  REQUIRE(q.ids.size() == 1);
  CHECK(q.ids[0] == 0);
  CHECK(q.scores[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("breaking ties boundaries") {
  auto s = scripted({{1.0, 0.0, 0.0}, {0.4, 0.35, 0.25}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.2, 0.5, 0.3}},
                    {0, 1, 2, 0});
  const auto q = query_breaking_ties(s.model, s.dataset, all_ids(4), 4);
  CHECK(q.ids == std::vector<InstanceId>{2, 1, 3, 0});
  CHECK(q.scores.back() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("equal margins go to the lower id") {
  auto s = scripted({{0.7, 0.3}, {0.3, 0.7}, {0.7, 0.3}}, {0, 1, 0});
  const std::vector<InstanceId> cand{2, 1, 0};
  const auto q = query_breaking_ties(s.model, s.dataset, cand, 2);
  CHECK(q.ids == std::vector<InstanceId>{0, 1});
}

TEST_CASE("breaking ties ranking survives a monotone transform of the margins") {
  Rng rng(3);
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  std::vector<std::vector<double>> dists;
  std::vector<Label> labels;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> d(3);
    double sum = 0.0;
    for (auto& v : d) sum += (v = unit(rng));
    for (auto& v : d) v /= sum;
    dists.push_back(d);
    labels.push_back(i % 3);
  }
  auto s = scripted(dists, labels);
  const auto q = query_breaking_ties(s.model, s.dataset, all_ids(30), 30);
  // Rank by exp(3 * margin) computed independently.
  std::vector<std::pair<double, InstanceId>> ref;
  for (InstanceId i = 0; i < 30; ++i)
    ref.emplace_back(std::exp(3.0 * margin(s.model.predict_proba(s.dataset.train_instance(i).embedding))), i);
  std::sort(ref.begin(), ref.end());
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(q.ids[i] == ref[i].second);
}

TEST_CASE("contrastive predictions") {
  // Instances 0 and 1 are labeled; 2 agrees with its neighbours, 3 disagrees.
  auto s = scripted({{0.9, 0.1}, {0.9, 0.1}, {0.9, 0.1}, {0.1, 0.9}}, {0, 0, 0, 1});
  PoolState pool = unlabeled_pool(4);
  pool.add_human(0, 0);
  pool.add_human(1, 0);
  const std::vector<InstanceId> cand{2, 3};
  const auto all = query_contrastive(s.model, s.dataset, pool, cand, 2, 10);
  CHECK(all.ids == std::vector<InstanceId>{3, 2});
  CHECK(all.scores[1] == doctest::Approx(0.0).epsilon(1e-12));
  const double expected = 0.9 * std::log(0.9 / 0.1) + 0.1 * std::log(0.1 / 0.9);
  CHECK(all.scores[0] == doctest::Approx(expected).epsilon(1e-9));

  const auto one = query_contrastive(s.model, s.dataset, pool, cand, 1, 10);
  CHECK(one.ids == std::vector<InstanceId>{3});

  CHECK_THROWS_AS(query_contrastive(s.model, s.dataset, unlabeled_pool(4), cand, 1, 10),
                  std::invalid_argument);
}

TEST_CASE("contrastive score uses the m nearest labeled instances") {
  // 2-d points: labeled 0 sits next to candidate 3, labeled 1 and 2 far away.
  const Dataset ds = hast::testing::small_dataset(
      {hast::testing::at_angle(0, 0), hast::testing::at_angle(90, 1), hast::testing::at_angle(100, 1),
       hast::testing::at_angle(5, 0)},
      {}, 2);
  const ProbModel model = ProbModel::logistic(2, 2, {3.0, 0.0, 0.0, 3.0}, {0.0, 0.0});
  PoolState pool = unlabeled_pool(4);
  pool.add_human(0, 0);
  pool.add_human(1, 1);
  pool.add_human(2, 1);
  const std::vector<InstanceId> cand{3};
  const auto q = query_contrastive(model, ds, pool, cand, 1, 1);
  const auto px = model.predict_proba(ds.train_instance(3).embedding);
  const auto pn = model.predict_proba(ds.train_instance(0).embedding);
  CHECK(q.scores[0] == doctest::Approx(kl_divergence(pn, px)).epsilon(1e-14));

  const auto q3 = query_contrastive(model, ds, pool, cand, 1, 3);
  double sum = 0.0;
  for (InstanceId n : {0, 1, 2})
    sum += kl_divergence(model.predict_proba(ds.train_instance(n).embedding), px);
  CHECK(q3.scores[0] == doctest::Approx(sum / 3).epsilon(1e-14));
}

TEST_CASE("strategies return distinct unlabeled ids and the whole pool at B = |U|") {
  const Dataset ds = generate_blobs(3, 30, 4, 3.0, 5);
  PoolState pool = init_pools(ds, 9, 2);
  const ProbModel model = ProbModel::logistic(3, 4, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0}, {0, 0, 0});
  for (auto strategy : {QueryStrategy::Random, QueryStrategy::BreakingTies,
                        QueryStrategy::ContrastivePredictions}) {
    ExperimentConfig cfg;
    cfg.query_strategy = strategy;
    cfg.batch_size = 10;
    Rng rng(4);
    const auto q = query(cfg, model, ds, pool, rng);
    CHECK(q.ids.size() == 10);
    CHECK(std::set<InstanceId>(q.ids.begin(), q.ids.end()).size() == 10);
    for (auto id : q.ids) CHECK(pool.is_unlabeled(id));
    Rng again(4);
    CHECK(query(cfg, model, ds, pool, again) == q);

    cfg.batch_size = pool.unlabeled().size();
    Rng full_rng(4);
    const auto full = query(cfg, model, ds, pool, full_rng);
    std::vector<InstanceId> sorted = full.ids;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == pool.unlabeled_ids());
  }
}

TEST_CASE("query subsamples large pools") {
  const Dataset ds = generate_blobs(2, 100, 4, 3.0, 5);
  const PoolState pool = init_pools(ds, 10, 2);
  ExperimentConfig cfg;
  cfg.query_strategy = QueryStrategy::BreakingTies;
  cfg.subsample_size = 20;
  cfg.batch_size = 50;
  const ProbModel model = ProbModel::logistic(2, 4, {1, 0, 0, 0, 0, 1, 0, 0}, {0, 0});
  Rng rng(1);
  CHECK(query(cfg, model, ds, pool, rng).ids.size() == 20);
}

TEST_CASE("nearest neighbours order by distance then id") {
  ReferenceSet refs;
  const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0}, c{1.0, 0.0};
  refs.add(5, a, 0);
  refs.add(2, b, 1);
  refs.add(3, c, 1);
  const std::vector<double> q{1.0, 0.1};
  const auto n = nearest(q, refs, 2);
  REQUIRE(n.size() == 2);
  CHECK(refs.ids[n[0].index] == 3);
  CHECK(refs.ids[n[1].index] == 5);
  CHECK(nearest(q, refs, 10).size() == 3);
  CHECK(cosine_distance(a, b) == doctest::Approx(1.0));
  CHECK(cosine_distance(a, std::vector<double>{0.0, 0.0}) == 1.0);
}
