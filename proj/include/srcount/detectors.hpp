#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "srcount/array_model.hpp"
#include "srcount/dataset.hpp"
#include "srcount/nn/layers.hpp"
#include "srcount/nn/optim.hpp"
#include "srcount/rng.hpp"

namespace srcount {

enum class Architecture { cnndetector, radionet };

Architecture parse_architecture(std::string_view name);
std::string_view to_string(Architecture a);

inline constexpr std::size_t kMinInputWidth = 16;

struct TrainingMeta {
  std::size_t epochs_seen = 0;
  std::string config_hash;
};

// Logits come straight from the final dense layer; softmax lives in the
// loss and in predict_proba.
struct DetectorModel {
  Architecture architecture = Architecture::cnndetector;
  std::size_t input_width = 0;
  std::size_t num_classes = 0;
  nn::Sequential<float> net;
  TrainingMeta meta;
};

std::vector<nn::LayerSpec> cnndetector_layers(std::size_t num_classes);
std::vector<nn::LayerSpec> radionet_layers(std::size_t num_classes);

// Builds the architecture and draws Xavier weights from rng.
DetectorModel build_cnndetector(std::size_t input_width, std::size_t num_classes, Rng& rng);
DetectorModel build_radionet(std::size_t input_width, std::size_t num_classes, Rng& rng);
DetectorModel build_detector(Architecture a, std::size_t input_width, std::size_t num_classes, Rng& rng);
// Same architecture with caller-provided layers, used when restoring checkpoints.
DetectorModel assemble_detector(Architecture a, std::size_t input_width, std::size_t num_classes,
                                const std::vector<nn::LayerSpec>& layers, std::uint64_t seed);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 when the initial weights were kept
  double best_val_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Shuffled mini-batch SGD on softmax cross-entropy. Keeps the parameters with
// the best validation accuracy; an empty validation set keeps the last epoch.
TrainHistory train_detector(DetectorModel& model, const LabeledDataset& train, const LabeledDataset& val,
                            const nn::TrainConfig& config, const EpochCallback& on_epoch = {});

// Logits for a block of feature rows; rows.size() must be a multiple of the model width.
nn::Tensor<float> logits(const DetectorModel& model, std::span<const float> rows);
std::vector<std::size_t> predict(const DetectorModel& model, std::span<const float> rows);
std::vector<std::size_t> predict(const DetectorModel& model, const LabeledDataset& data);
std::vector<double> predict_proba(const DetectorModel& model, std::span<const float> row);
double accuracy(const DetectorModel& model, const LabeledDataset& data);

// First maximal index.
std::size_t argmax(std::span<const float> values);

std::size_t detect_sources(const DetectorModel& model, const Frame& frame);
std::size_t detect_sources_coherent(const DetectorModel& model, const Frame& frame, std::size_t subarray_size);

}  // namespace srcount
