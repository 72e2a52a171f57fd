#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hast/dataset.hpp"

namespace hast::cli {

// Separation of the built-in `blobs4` benchmark (4 classes, 500 train and
// 250 test points per class, d = 16, data seed 7).
inline constexpr double kBlobs4Separation = 5.5;

// Resolves a built-in dataset name: `blobs4`, or
// `blobs:C,PER_CLASS,DIM,SEPARATION,SEED`. Throws std::invalid_argument otherwise.
Dataset builtin_dataset(const std::string& name);
bool is_builtin_dataset(const std::string& name);

// --data-dir if given, else $HAST_DATA_DIR, else ./hast-data.
std::filesystem::path resolve_data_dir(const std::string& flag);

// Subcommands: run, serve, plot, validate-dataset. Returns the process exit code.
int main(int argc, char** argv);
int main(const std::vector<std::string>& args);

}  // namespace hast::cli
