#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hast {

using InstanceId = std::int64_t;
using Label = int;
using Rng = std::mt19937_64;

enum class Metric { Accuracy, MacroF1 };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& name);

// One pool element. `id` is dense: train instances are numbered 0..n-1 in file
// order, test instances continue at n. `source_id` keeps the id from the file.
struct Instance {
  InstanceId id = 0;
  std::int64_t source_id = 0;
  std::optional<std::string> text;
  std::vector<double> embedding;
  Label true_label = 0;
};

struct Dataset {
  std::string name;
  std::vector<Instance> train;
  std::vector<Instance> test;
  int num_classes = 0;
  Metric metric = Metric::Accuracy;

  std::size_t dim() const { return train.empty() ? 0 : train.front().embedding.size(); }

  // Train instance by dense id. Throws std::out_of_range for test or unknown ids.
  const Instance& train_instance(InstanceId id) const;
};

class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(const std::string& what, std::size_t line = 0);
  // 1-based line number of the offending record, 0 when not line-specific.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LoadOptions {
  std::string name = "dataset";
  Metric metric = Metric::Accuracy;
  // Inferred as max(label) + 1 over the training file when absent.
  std::optional<int> num_classes;
};

// Parses a JSONL file of {"id", "embedding", "label", "text"?} objects.
// Embeddings are returned as stored; normalization happens in load_dataset.
std::vector<Instance> read_jsonl(const std::filesystem::path& path);
std::vector<Instance> read_jsonl(std::istream& in);

// Loads a train file and an optional test file, assigns dense ids,
// L2-normalizes embeddings and validates every dataset invariant.
Dataset load_dataset(const std::filesystem::path& train_path,
                     const std::optional<std::filesystem::path>& test_path,
                     const LoadOptions& options = {});

// Builds a dataset from already parsed instances (same normalization and checks).
Dataset make_dataset(std::vector<Instance> train, std::vector<Instance> test,
                     const LoadOptions& options);

void validate(const Dataset& dataset);

void l2_normalize(std::vector<double>& v);

// Centroids used by generate_blobs: for C <= dim they sit on scaled basis
// vectors so that every pair is exactly `separation` apart.
std::vector<std::vector<double>> blob_centroids(int num_classes, int dim, double separation,
                                                std::uint64_t rng_seed);

// Isotropic unit-variance Gaussian clusters. `per_class` training points per
// class plus per_class / 2 test points per class (2:1 stratified split).
Dataset generate_blobs(int num_classes, int per_class, int dim, double separation,
                       std::uint64_t rng_seed);

void write_jsonl(std::ostream& out, std::span<const Instance> instances);

}  // namespace hast
