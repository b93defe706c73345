#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnewton/dataset.hpp"
#include "qnewton/training.hpp"

namespace qnewton {

struct DatasetConfig {
  std::string kind = "blobs";  // "blobs" or "idx"
  std::string images;
  std::string labels;
  std::size_t downsample_side = 8;
  double test_fraction = 0.2;  // idx only; blobs use blobs.test_fraction
  std::uint64_t seed = 1;
  GaussianBlobsParams blobs;

  bool operator==(const DatasetConfig&) const = default;
};

struct SweepConfig {
  std::vector<double> kappa{1, 10, 100, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10};
  std::vector<double> density{0.01, 0.05, 0.1, 0.3, 0.5, 1.0};
  std::vector<std::size_t> n{16, 64, 256, 1024, 2048};
  std::vector<double> sparsity{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  std::vector<double> epsilon_reg{1e-3, 1e-2, 1e-1, 0.3, 0.5, 0.9};

  bool operator==(const SweepConfig&) const = default;
};

struct CalibrationConfig {
  std::vector<std::size_t> sizes{64, 128, 256, 384};
  int repetitions = 3;

  bool operator==(const CalibrationConfig&) const = default;
};

/// Everything a run needs, loaded from a single JSON file.
struct RunConfig {
  /// optimizer, scheduler_mode, learning_rate (Newton), etc.
  TrainConfig train;
  double sgd_learning_rate = 0.2;
  std::string output_dir = "out";
  DatasetConfig dataset;
  SweepConfig sweep;
  CalibrationConfig calibration;

  bool operator==(const RunConfig&) const = default;
};

/// "hybrid" | "classical" | "quantum" | "sgd".
std::string mode_name(const TrainConfig& t);
void apply_mode(TrainConfig& t, const std::string& mode);

nlohmann::json to_json(const RunConfig& config);
/// Unknown keys at any level are a ConfigError.
RunConfig from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

/// Builds (or loads) the dataset selected by the config.
Dataset load_dataset(const RunConfig& config);

/// The TrainConfig for `mode`, with the SGD learning rate swapped in for sgd.
TrainConfig train_config_for(const RunConfig& config, const std::string& mode);

}  // namespace qnewton
