#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srcount/array_model.hpp"
#include "srcount/classical.hpp"
#include "srcount/dataset.hpp"
#include "srcount/detectors.hpp"

namespace srcount {

// SINR in dB, either fixed or drawn uniformly per frame.
struct SinrPolicy {
  double low = 0.0;
  double high = 20.0;

  static SinrPolicy fixed(double db) { return {db, db}; }
  static SinrPolicy uniform(double lo, double hi) { return {lo, hi}; }
  bool is_fixed() const noexcept { return low == high; }
};

struct GenerationConfig {
  std::vector<std::size_t> classes;                  // non-coherent source counts
  std::vector<std::size_t> coherent_counts{0};       // replica counts drawn per frame
  std::size_t snapshots = 256;
  SinrPolicy sinr = SinrPolicy::uniform(0.0, 20.0);
  double min_separation_deg = 1.0;
  Pipeline pipeline = Pipeline::plain;
  std::size_t subarray_size = 5;                     // fbss only
  LabelSemantics semantics = LabelSemantics::total;
  std::size_t count = 0;
  std::uint64_t seed = 1;
  Split split = Split::train;

  // Covariance side n seen by the feature extractor.
  std::size_t cov_side(const ArrayGeometry& g) const;
  std::size_t width(const ArrayGeometry& g) const { return cov_side(g) * (cov_side(g) + 1); }
  // Canonical text form; its hash is the dataset provenance.
  std::string describe(const ArrayGeometry& g) const;
};

// Throws ConfigError when a configured class cannot be realised on the array.
void validate(const ArrayGeometry& geometry, const GenerationConfig& config);

// Frame i of the configured stream. Splits use distinct seed tags, so frame i
// of train and frame i of test never coincide.
Frame generate_frame(const ArrayGeometry& geometry, const GenerationConfig& config, std::size_t index);
std::vector<double> frame_features(const Frame& frame, const GenerationConfig& config);

// Worker count from SRCOUNT_THREADS, default 1.
std::size_t worker_threads();

LabeledDataset build_dataset(const ArrayGeometry& geometry, const GenerationConfig& config);
std::vector<Frame> build_frames(const ArrayGeometry& geometry, const GenerationConfig& config);

class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::string name() const = 0;
  virtual std::vector<std::size_t> predict(const LabeledDataset& data) const = 0;
};

class LearnedDetector final : public Detector {
 public:
  LearnedDetector(std::string name, std::shared_ptr<const DetectorModel> model)
      : name_(std::move(name)), model_(std::move(model)) {}
  std::string name() const override { return name_; }
  std::vector<std::size_t> predict(const LabeledDataset& data) const override;
  const DetectorModel& model() const { return *model_; }

 private:
  std::string name_;
  std::shared_ptr<const DetectorModel> model_;
};

// MDL or AIC on the covariance rebuilt from each feature row; the snapshot
// count comes from the dataset.
class ClassicalDetector final : public Detector {
 public:
  explicit ClassicalDetector(Criterion c) : criterion_(c) {}
  std::string name() const override { return std::string(to_string(criterion_)); }
  std::vector<std::size_t> predict(const LabeledDataset& data) const override;

 private:
  Criterion criterion_;
};

// Returns the ground-truth label; a self-test of the evaluation harness.
class OracleDetector final : public Detector {
 public:
  std::string name() const override { return "oracle"; }
  std::vector<std::size_t> predict(const LabeledDataset& data) const override { return data.labels(); }
};

class ConstantDetector final : public Detector {
 public:
  explicit ConstantDetector(std::size_t label) : label_(label) {}
  std::string name() const override { return "constant" + std::to_string(label_); }
  std::vector<std::size_t> predict(const LabeledDataset& data) const override {
    return std::vector<std::size_t>(data.size(), label_);
  }

 private:
  std::size_t label_;
};

struct EvalReport {
  std::size_t num_classes = 0;
  std::vector<std::size_t> confusion;  // row-major, rows = true label
  std::vector<std::size_t> support;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::size_t total = 0;
  double accuracy = 0.0;

  std::size_t at(std::size_t truth, std::size_t pred) const { return confusion[truth * num_classes + pred]; }
};

// The class count grows to cover any label or prediction beyond min_classes.
EvalReport evaluate(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                    std::size_t min_classes = 0);
EvalReport evaluate(const Detector& detector, const LabeledDataset& data, std::size_t min_classes = 0);

inline const std::vector<double> kSinrSweepPoints{0.0, 5.0, 10.0, 15.0, 20.0};
inline const std::vector<std::size_t> kSnapshotSweepPoints{10, 16, 32, 64, 128, 256};
inline constexpr std::size_t kDefaultPointFrames = 3000;

// Fixed detectors are reused across points. A retrain hook, when present,
// produces a fresh detector for each snapshot setting.
struct SweepEntry {
  std::string name;
  std::shared_ptr<const Detector> detector;
  std::function<std::shared_ptr<const Detector>(std::size_t snapshots)> retrain;
};

struct SweepTable {
  std::string axis;                 // "sinr_db" or "snapshots"
  std::vector<double> points;
  std::vector<std::string> detectors;
  std::vector<std::vector<double>> accuracy;  // [detector][point]
};

// Test-set config for sweep point (or grid cell) index: base with the count,
// split and a point-specific seed overridden.
GenerationConfig point_config(const GenerationConfig& base, std::size_t frames, std::size_t index);

// Each point draws a fresh test set of frames_per_point frames from base
// with the swept quantity overridden and a point-specific seed.
SweepTable sweep_sinr(const std::vector<SweepEntry>& detectors, const std::vector<double>& sinr_db,
                      std::size_t frames_per_point, const ArrayGeometry& geometry, const GenerationConfig& base);
SweepTable sweep_snapshots(const std::vector<SweepEntry>& detectors, const std::vector<std::size_t>& snapshots,
                           std::size_t frames_per_point, const ArrayGeometry& geometry, const GenerationConfig& base);

struct GridCell {
  std::size_t noncoherent = 0;
  std::size_t coherent = 0;
  std::vector<double> accuracy;  // per detector
};

struct GridTable {
  std::vector<std::string> detectors;
  std::vector<GridCell> cells;  // infeasible cells are omitted
};

GridTable grid_coherent(const std::vector<SweepEntry>& detectors, const std::vector<std::size_t>& noncoherent,
                        const std::vector<std::size_t>& coherent, std::size_t frames_per_cell,
                        const ArrayGeometry& geometry, const GenerationConfig& base);

// Tab-separated, one header line.
std::string sweep_tsv(const SweepTable& table, std::size_t detector);
std::string grid_tsv(const GridTable& table, std::size_t detector);
std::string report_tsv(const EvalReport& report);

}  // namespace srcount
