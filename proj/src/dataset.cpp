#include "hast/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace hast {

using nlohmann::json;

std::string to_string(Metric metric) {
  return metric == Metric::Accuracy ? "accuracy" : "macro-f1";
}

Metric parse_metric(const std::string& name) {
  if (name == "accuracy") return Metric::Accuracy;
  if (name == "macro-f1" || name == "f1") return Metric::MacroF1;
  throw std::invalid_argument("unknown metric '" + name + "' (valid: accuracy, macro-f1)");
}

const Instance& Dataset::train_instance(InstanceId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= train.size())
    throw std::out_of_range("no training instance with id " + std::to_string(id));
  return train[static_cast<std::size_t>(id)];
}

DatasetError::DatasetError(const std::string& what, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

namespace {

Instance parse_line(const std::string& text, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DatasetError(std::string("malformed JSON: ") + e.what(), line_no);
  }
  if (!obj.is_object()) throw DatasetError("expected a JSON object", line_no);

  Instance inst;
  try {
    inst.source_id = obj.at("id").get<std::int64_t>();
    inst.true_label = obj.at("label").get<int>();
    inst.embedding = obj.at("embedding").get<std::vector<double>>();
    if (auto it = obj.find("text"); it != obj.end() && !it->is_null())
      inst.text = it->get<std::string>();
  } catch (const json::exception& e) {
    throw DatasetError(std::string("bad record: ") + e.what(), line_no);
  }
  if (inst.true_label < 0) throw DatasetError("negative label", line_no);
  if (inst.embedding.empty()) throw DatasetError("empty embedding", line_no);
  for (double v : inst.embedding)
    if (!std::isfinite(v)) throw DatasetError("non-finite embedding entry", line_no);
  return inst;
}

// Line numbers are kept in `lines` so that later validation can name them.
std::vector<Instance> read_lines(std::istream& in, std::vector<std::size_t>* lines) {
  std::vector<Instance> out;
  std::string text;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    Instance inst = parse_line(text, line_no);
    if (out.empty()) {
      dim = inst.embedding.size();
    } else if (inst.embedding.size() != dim) {
      throw DatasetError("embedding dimension " + std::to_string(inst.embedding.size()) +
                             " differs from " + std::to_string(dim),
                         line_no);
    }
    out.push_back(std::move(inst));
    if (lines) lines->push_back(line_no);
  }
  return out;
}

std::vector<Instance> read_file(const std::filesystem::path& path,
                                std::vector<std::size_t>* lines) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path.string());
  return read_lines(in, lines);
}

void check_labels(const std::vector<Instance>& instances, const std::vector<std::size_t>& lines,
                  int num_classes) {
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].true_label >= num_classes)
      throw DatasetError("label " + std::to_string(instances[i].true_label) +
                             " >= number of classes " + std::to_string(num_classes),
                         i < lines.size() ? lines[i] : 0);
  }
}

}  // namespace

std::vector<Instance> read_jsonl(std::istream& in) { return read_lines(in, nullptr); }

std::vector<Instance> read_jsonl(const std::filesystem::path& path) {
  return read_file(path, nullptr);
}

void l2_normalize(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq <= 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
}

Dataset make_dataset(std::vector<Instance> train, std::vector<Instance> test,
                     const LoadOptions& options) {
  if (train.empty()) throw DatasetError("empty dataset");
  Dataset ds;
  ds.name = options.name;
  ds.metric = options.metric;
  if (options.num_classes) {
    ds.num_classes = *options.num_classes;
  } else {
    Label max_label = 0;
    for (const auto& inst : train) max_label = std::max(max_label, inst.true_label);
    ds.num_classes = max_label + 1;
  }

  InstanceId next = 0;
  for (auto& inst : train) {
    inst.id = next++;
    l2_normalize(inst.embedding);
  }
  for (auto& inst : test) {
    inst.id = next++;
    l2_normalize(inst.embedding);
  }
  ds.train = std::move(train);
  ds.test = std::move(test);
  validate(ds);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& train_path,
                     const std::optional<std::filesystem::path>& test_path,
                     const LoadOptions& options) {
  std::vector<std::size_t> train_lines;
  std::vector<std::size_t> test_lines;
  auto train = read_file(train_path, &train_lines);
  if (train.empty()) throw DatasetError("empty dataset");
  std::vector<Instance> test;
  if (test_path) test = read_file(*test_path, &test_lines);

  if (options.num_classes) {
    check_labels(train, train_lines, *options.num_classes);
    check_labels(test, test_lines, *options.num_classes);
  }
  if (!test.empty() && test.front().embedding.size() != train.front().embedding.size())
    throw DatasetError("test embedding dimension differs from training dimension",
                       test_lines.front());
  return make_dataset(std::move(train), std::move(test), options);
}

void validate(const Dataset& ds) {
  if (ds.train.empty()) throw DatasetError("empty dataset");
  if (ds.num_classes <= 0) throw DatasetError("number of classes must be positive");
  const std::size_t dim = ds.dim();
  std::vector<bool> present(static_cast<std::size_t>(ds.num_classes), false);
  std::set<InstanceId> train_ids;
  std::set<std::int64_t> source_ids;

  auto check = [&](const Instance& inst, const char* split) {
    if (inst.embedding.size() != dim)
      throw DatasetError(std::string(split) + " instance " + std::to_string(inst.source_id) +
                         " has embedding dimension " + std::to_string(inst.embedding.size()) +
                         ", expected " + std::to_string(dim));
    for (double v : inst.embedding)
      if (!std::isfinite(v))
        throw DatasetError(std::string(split) + " instance " + std::to_string(inst.source_id) +
                           " has a non-finite embedding entry");
    if (inst.true_label < 0 || inst.true_label >= ds.num_classes)
      throw DatasetError(std::string(split) + " instance " + std::to_string(inst.source_id) +
                         " has label " + std::to_string(inst.true_label) +
                         " outside [0, " + std::to_string(ds.num_classes) + ")");
  };

  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    const auto& inst = ds.train[i];
    check(inst, "train");
    if (inst.id != static_cast<InstanceId>(i))
      throw DatasetError("training ids must be dense and in file order");
    if (!source_ids.insert(inst.source_id).second)
      throw DatasetError("duplicate training id " + std::to_string(inst.source_id));
    present[static_cast<std::size_t>(inst.true_label)] = true;
    train_ids.insert(inst.id);
  }
  for (const auto& inst : ds.test) {
    check(inst, "test");
    if (train_ids.count(inst.id))
      throw DatasetError("test id " + std::to_string(inst.id) + " collides with a training id");
  }
  for (std::size_t c = 0; c < present.size(); ++c)
    if (!present[c])
      throw DatasetError("class " + std::to_string(c) + " has no training instance");
}

std::vector<std::vector<double>> blob_centroids(int num_classes, int dim, double separation,
                                                std::uint64_t rng_seed) {
  if (num_classes <= 0 || dim <= 0 || !(separation > 0.0))
    throw std::invalid_argument("blob parameters must be positive");
  const double radius = separation / std::sqrt(2.0);
  std::vector<std::vector<double>> centroids(static_cast<std::size_t>(num_classes),
                                             std::vector<double>(static_cast<std::size_t>(dim)));
  if (num_classes <= dim) {
    for (int c = 0; c < num_classes; ++c) centroids[c][c] = radius;
    return centroids;
  }
  // More classes than dimensions: random directions on the sphere of the same
  // radius, so pairwise distances are only approximately `separation`.
  Rng rng(rng_seed ^ 0xc2b2ae3d27d4eb4fULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& c : centroids) {
    for (auto& v : c) v = normal(rng);
    l2_normalize(c);
    for (auto& v : c) v *= radius;
  }
  return centroids;
}

Dataset generate_blobs(int num_classes, int per_class, int dim, double separation,
                       std::uint64_t rng_seed) {
  if (per_class <= 0) throw std::invalid_argument("blob parameters must be positive");
  const auto centroids = blob_centroids(num_classes, dim, separation, rng_seed);
  Rng rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int test_per_class = per_class / 2;
  std::vector<Instance> train;
  std::vector<Instance> test;
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < per_class + test_per_class; ++i) {
      Instance inst;
      inst.true_label = c;
      inst.embedding = centroids[static_cast<std::size_t>(c)];
      for (auto& v : inst.embedding) v += normal(rng);
      (i < per_class ? train : test).push_back(std::move(inst));
    }
  }
  std::shuffle(train.begin(), train.end(), rng);
  std::shuffle(test.begin(), test.end(), rng);
  std::int64_t next = 0;
  for (auto& inst : train) inst.source_id = next++;
  for (auto& inst : test) inst.source_id = next++;

  std::ostringstream name;
  name << "blobs-c" << num_classes << "-n" << per_class << "-d" << dim << "-s" << separation
       << "-r" << rng_seed;
  return make_dataset(std::move(train), std::move(test),
                      LoadOptions{name.str(), Metric::Accuracy, num_classes});
}

void write_jsonl(std::ostream& out, std::span<const Instance> instances) {
  for (const auto& inst : instances) {
    json obj;
    obj["id"] = inst.source_id;
    if (inst.text) obj["text"] = *inst.text;
    obj["embedding"] = inst.embedding;
    obj["label"] = inst.true_label;
    out << obj.dump() << '\n';
  }
}

}  // namespace hast
