#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srcount/array_model.hpp"
#include "srcount/detectors.hpp"
#include "srcount/evalkit.hpp"
#include "srcount/nn/optim.hpp"

namespace srcount {

struct SplitSizes {
  std::size_t train = 20000;
  std::size_t val = 2000;
  std::size_t test = 2000;
};

struct SweepConfig {
  std::vector<std::string> detectors;  // "mdl", "aic", "model"
  std::vector<double> sinr_db = kSinrSweepPoints;
  std::vector<std::size_t> snapshots = kSnapshotSweepPoints;
  std::vector<std::size_t> noncoherent{0, 1, 2, 3, 4, 5};
  std::vector<std::size_t> coherent{0, 1, 2, 3, 4};
  std::size_t frames_per_point = kDefaultPointFrames;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t elements = 10;
  double spacing = 0.5;
  GenerationConfig scenario;  // count, seed and split are filled per command
  SplitSizes sizes;
  Architecture architecture = Architecture::cnndetector;
  std::size_t num_classes = 10;
  nn::TrainConfig train;
  // Epochs on the zero-replica subset before the full training set.
  std::size_t curriculum_epochs = 0;
  SweepConfig sweep;
  std::filesystem::path out_dir = ".";

  ArrayGeometry geometry() const { return ArrayGeometry(elements, spacing); }
  std::size_t input_width() const { return scenario.width(geometry()); }
  GenerationConfig generation(Split split) const;
};

// Strict JSON: unknown keys and type mismatches raise ConfigError naming the
// offending field path. Cross-field consistency is checked before returning.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string dump_config(const RunConfig& config);

}  // namespace srcount
