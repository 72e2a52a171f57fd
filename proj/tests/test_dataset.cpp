#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hast/config.hpp"
#include "hast/pool.hpp"
#include "helpers.hpp"

using namespace hast;
using hast::testing::point;
using hast::testing::scratch_dir;

namespace {

std::filesystem::path write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string serialize(const Dataset& ds) {
  std::ostringstream out;
  write_jsonl(out, ds.train);
  write_jsonl(out, ds.test);
  return out.str();
}

}  // namespace

TEST_CASE("load_dataset parses a four line file") {
  const auto dir = scratch_dir("load");
  const auto path = write_text(dir / "train.jsonl",
                               R"({"id": 10, "embedding": [1, 0], "label": 0, "text": "a"}
{"id": 11, "embedding": [0.9, 0.1], "label": 0}
{"id": 12, "embedding": [0, 1], "label": 1}
{"id": 13, "embedding": [0.2, 0.8], "label": 1}
)");
  const Dataset ds = load_dataset(path, std::nullopt);
  CHECK(ds.train.size() == 4);
  CHECK(ds.num_classes == 2);
  CHECK(ds.dim() == 2);
  CHECK(ds.train[0].text == std::optional<std::string>("a"));
  CHECK_FALSE(ds.train[1].text.has_value());
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(ds.train[i].id == static_cast<InstanceId>(i));
    CHECK(ds.train[i].source_id == 10 + static_cast<std::int64_t>(i));
    double norm = 0.0;
    for (double v : ds.train[i].embedding) norm += v * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("load_dataset names the line with a wrong embedding length") {
  const auto dir = scratch_dir("dim");
  const auto path = write_text(dir / "train.jsonl",
                               R"({"id": 1, "embedding": [1, 0], "label": 0}
{"id": 2, "embedding": [1, 0, 3], "label": 1}
)");
  try {
    load_dataset(path, std::nullopt);
    FAIL("expected a dimension error");
  } catch (const DatasetError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("dimension") != std::string::npos);
  }
}

TEST_CASE("load_dataset rejects empty files, malformed lines and labels >= C") {
  const auto dir = scratch_dir("bad");
  CHECK_THROWS_WITH_AS(load_dataset(write_text(dir / "empty.jsonl", ""), std::nullopt),
                       "empty dataset", DatasetError);

  try {
    load_dataset(write_text(dir / "garbage.jsonl",
                            "{\"id\": 1, \"embedding\": [1], \"label\": 0}\nnot json\n"),
                 std::nullopt);
    FAIL("expected a parse error");
  } catch (const DatasetError& e) {
    CHECK(e.line() == 2);
  }

  LoadOptions opts;
  opts.num_classes = 2;
  try {
    load_dataset(write_text(dir / "label.jsonl",
                            "{\"id\": 1, \"embedding\": [1], \"label\": 0}\n"
                            "{\"id\": 2, \"embedding\": [1], \"label\": 1}\n"
                            "{\"id\": 3, \"embedding\": [1], \"label\": 2}\n"),
                 std::nullopt, opts);
    FAIL("expected a label error");
  } catch (const DatasetError& e) {
    CHECK(e.line() == 3);
  }

  CHECK_THROWS_AS(load_dataset(dir / "missing.jsonl", std::nullopt), DatasetError);
}

TEST_CASE("dataset invariants are enforced") {
  // Class 1 missing from train.
  CHECK_THROWS_AS(hast::testing::small_dataset({point({1, 0}, 0), point({0, 1}, 0)}, {}, 2),
                  DatasetError);
  // Non-finite entry.
  CHECK_THROWS_AS(hast::testing::small_dataset({point({1, NAN}, 0)}, {}, 1), DatasetError);
  // Duplicate source id.
  std::vector<Instance> dup{point({1, 0}, 0), point({0, 1}, 1)};
  LoadOptions opts;
  CHECK_THROWS_AS(make_dataset(dup, {}, opts), DatasetError);  // both source ids are 0

  const Dataset ds = hast::testing::small_dataset({point({1, 0}, 0), point({0, 1}, 1)},
                                                  {point({1, 1}, 0)}, 2);
  CHECK(ds.test[0].id == 2);
  CHECK_THROWS_AS(ds.train_instance(2), std::out_of_range);
}

TEST_CASE("generate_blobs sizes, determinism and separation") {
  const Dataset ds = generate_blobs(4, 500, 16, 8.0, 7);
  CHECK(ds.train.size() == 2000);
  CHECK(ds.test.size() == 1000);
  CHECK(ds.num_classes == 4);
  std::vector<int> train_counts(4), test_counts(4);
  for (const auto& inst : ds.train) ++train_counts[inst.true_label];
  for (const auto& inst : ds.test) ++test_counts[inst.true_label];
  for (int c = 0; c < 4; ++c) {
    CHECK(train_counts[c] == 500);
    CHECK(test_counts[c] == 250);
  }
  CHECK(serialize(ds) == serialize(generate_blobs(4, 500, 16, 8.0, 7)));
  CHECK(serialize(ds) != serialize(generate_blobs(4, 500, 16, 8.0, 8)));

  const auto centroids = blob_centroids(4, 16, 8.0, 7);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      double sq = 0.0;
      for (std::size_t j = 0; j < 16; ++j) sq += std::pow(centroids[a][j] - centroids[b][j], 2);
      CHECK(std::sqrt(sq) == doctest::Approx(8.0).epsilon(1e-12));
    }
}

TEST_CASE("well separated blobs are classified perfectly by the true centroids") {
  const Dataset ds = generate_blobs(2, 10, 2, 100.0, 1);
  const auto centroids = blob_centroids(2, 2, 100.0, 1);
  CHECK(ds.test.size() == 10);
  for (const auto& inst : ds.test)
    CHECK(hast::testing::nearest_true_centroid(inst.embedding, centroids) == inst.true_label);
}

TEST_CASE("init_pools") {
  const Dataset small = generate_blobs(2, 5, 2, 4.0, 3);
  const PoolState all = init_pools(small, 10, 1);
  CHECK(all.labeled().size() == 10);
  CHECK(all.unlabeled().empty());

  const Dataset ds = generate_blobs(4, 250, 8, 4.0, 3);
  const PoolState pool = init_pools(ds, 30, 5);
  CHECK(pool.labeled().size() == 30);
  CHECK(pool.unlabeled().size() == 970);
  CHECK(pool.human_count() == 30);
  for (const auto& r : pool.labeled()) {
    CHECK(r.provenance == Provenance::Human);
    CHECK(r.raw_weight == 1.0);
    CHECK(r.label == ds.train_instance(r.id).true_label);
    CHECK_FALSE(pool.is_unlabeled(r.id));
  }
  CHECK(pool == init_pools(ds, 30, 5));
  CHECK_FALSE(pool == init_pools(ds, 30, 6));
  CHECK_THROWS_AS(init_pools(small, 11, 1), std::invalid_argument);
}

TEST_CASE("stratified seed draw covers every class") {
  const Dataset ds = generate_blobs(4, 100, 8, 4.0, 3);
  Rng rng(9);
  const auto ids = draw_seed_ids(ds, 8, rng, true);
  std::vector<int> counts(4);
  for (auto id : ids) ++counts[ds.train_instance(id).true_label];
  for (int c : counts) CHECK(c == 2);
}

TEST_CASE("subsample_unlabeled") {
  SUBCASE("n larger than the pool returns everything") {
    std::set<InstanceId> u;
    for (InstanceId i = 0; i < 100; ++i) u.insert(i);
    PoolState pool(u);
    Rng rng(1);
    const auto ids = subsample_unlabeled(pool, 16384, rng);
    CHECK(ids == pool.unlabeled_ids());
  }
  SUBCASE("exact draw size from a large pool") {
    std::set<InstanceId> u;
    for (InstanceId i = 0; i < 20000; ++i) u.insert(i);
    PoolState pool(u);
    Rng rng(1);
    const auto ids = subsample_unlabeled(pool, 16384, rng);
    CHECK(ids.size() == 16384);
    CHECK(std::set<InstanceId>(ids.begin(), ids.end()).size() == 16384);
    CHECK(std::is_sorted(ids.begin(), ids.end()));
    for (auto id : ids) CHECK(pool.is_unlabeled(id));
    Rng again(1);
    CHECK(subsample_unlabeled(pool, 16384, again) == ids);
  }
  SUBCASE("single draw and zero") {
    PoolState pool(std::set<InstanceId>{3, 4, 5});
    Rng rng(2);
    const auto one = subsample_unlabeled(pool, 1, rng);
    REQUIRE(one.size() == 1);
    CHECK(pool.is_unlabeled(one[0]));
    CHECK_THROWS_AS(subsample_unlabeled(pool, 0, rng), std::invalid_argument);
  }
}

TEST_CASE("pool operations keep L and U disjoint and complete") {
  const Dataset ds = generate_blobs(3, 40, 4, 4.0, 11);
  PoolState pool = init_pools(ds, 10, 4);
  Rng rng(4);
  const std::size_t total = pool.size();
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (int step = 0; step < 80; ++step) {
    const auto u = pool.unlabeled_ids();
    if (u.empty()) break;
    const InstanceId id = u[rng() % u.size()];
    if (rng() % 2) pool.add_human(id, ds.train_instance(id).true_label);
    else pool.add_pseudo(id, static_cast<Label>(rng() % 3), unit(rng));
    if (step % 17 == 0) pool = pool.human_only();

    CHECK(pool.size() == total);
    std::set<InstanceId> seen;
    for (const auto& r : pool.labeled()) {
      CHECK(seen.insert(r.id).second);
      CHECK_FALSE(pool.is_unlabeled(r.id));
      CHECK(r.id < static_cast<InstanceId>(ds.train.size()));
      if (r.provenance == Provenance::Human) CHECK(r.raw_weight == 1.0);
    }
  }
  const InstanceId labeled = pool.labeled().front().id;
  CHECK_THROWS_AS(pool.add_human(labeled, 0), std::logic_error);
  CHECK_THROWS_AS(pool.add_pseudo(pool.unlabeled_ids().front(), 0, 0.0), std::invalid_argument);
}

TEST_CASE("set_raw_weight refuses human records") {
  PoolState pool(std::set<InstanceId>{0, 1});
  pool.add_human(0, 0);
  pool.add_pseudo(1, 1, 0.3);
  CHECK_THROWS_AS(pool.set_raw_weight(0, 2.0), std::logic_error);
  pool.set_raw_weight(1, 0.7);
  CHECK(pool.labeled()[1].raw_weight == 0.7);
  const PoolState human = pool.human_only();
  CHECK(human.labeled().size() == 1);
  CHECK(human.is_unlabeled(1));
}

TEST_CASE("config defaults, round trip and validation") {
  const ExperimentConfig c;
  CHECK(c.seed_size + c.num_queries * c.batch_size == 130);
  CHECK(c.k == 5);
  CHECK(c.beta == 0.1);
  CHECK(c.subsample_size == 16384);
  CHECK(c.self_train_iterations == 1);
  CHECK(c.num_runs == 5);

  ExperimentConfig d = c;
  d.query_strategy = QueryStrategy::ContrastivePredictions;
  d.self_training = SelfTrainingMethod::VERIPS;
  d.classifier.kind = ModelKind::NearestCentroid;
  d.beta = 0.25;
  const ExperimentConfig back = config_from_json(to_json(d));
  CHECK(to_json(back) == to_json(d));
  CHECK(fingerprint(back) == fingerprint(d));
  CHECK(fingerprint(c) != fingerprint(d));
  ExperimentConfig reseeded = d;
  reseeded.rng_seed = 99;
  CHECK(fingerprint(reseeded) == fingerprint(d));

  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"beta", 0.0}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"label_noise", 1.0}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"query_strategy", "bald"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"k", "five"}}), ConfigError);

  const Dataset ds = generate_blobs(2, 50, 2, 4.0, 1);
  CHECK_THROWS_AS(validate(c, ds), ConfigError);  // 130 > 100
  ExperimentConfig fits = c;
  fits.num_queries = 7;
  CHECK_NOTHROW(validate(fits, ds));
}

TEST_CASE("parsers list the valid values") {
  try {
    parse_query_strategy("uncertainty");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("breaking-ties") != std::string::npos);
    CHECK(msg.find("contrastive-predictions") != std::string::npos);
    CHECK(msg.find("random") != std::string::npos);
  }
  CHECK(parse_self_training("threshold") == SelfTrainingMethod::Threshold);
  CHECK(parse_model_kind("nearest-centroid") == ModelKind::NearestCentroid);
  CHECK(parse_metric("macro-f1") == Metric::MacroF1);
}
