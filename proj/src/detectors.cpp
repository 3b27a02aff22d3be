#include "srcount/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "srcount/covariance.hpp"
#include "srcount/errors.hpp"
#include "srcount/nn/ops.hpp"

namespace srcount {

using nn::LayerSpec;
using nn::Tensor;

namespace {

constexpr std::size_t kInferBatch = 256;
constexpr std::uint64_t kShuffleTag = 0x5348554646ULL;

void check_build(std::size_t input_width, std::size_t num_classes) {
  if (input_width < kMinInputWidth) {
    throw ConfigError("model.input_width: must be >= " + std::to_string(kMinInputWidth) + ", got " +
                      std::to_string(input_width));
  }
  if (num_classes < 2) throw ConfigError("model.num_classes: must be >= 2");
}

std::string train_digest(const nn::TrainConfig& c, const LabeledDataset& train) {
  std::ostringstream os;
  os << c.learning_rate << ';' << c.momentum << ';' << c.nesterov << ';' << c.batch_size << ';' << c.epochs << ';'
     << c.seed << ';' << train.provenance << ';' << train.size();
  return hex64(fnv1a64(os.str()));
}

void check_dataset(const DetectorModel& model, const LabeledDataset& data, const char* what) {
  if (data.empty()) return;
  if (data.width != model.input_width) {
    throw DataError(std::string(what) + " features have width " + std::to_string(data.width) + ", model expects " +
                    std::to_string(model.input_width));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.label(i) >= model.num_classes) {
      throw DataError(std::string(what) + " label " + std::to_string(data.label(i)) + " at row " + std::to_string(i) +
                      " is outside [0, " + std::to_string(model.num_classes - 1) + "]");
    }
  }
}

using Snapshot = std::vector<std::vector<float>>;

Snapshot snapshot(nn::Sequential<float>& net) {
  Snapshot s;
  for (auto& t : net.state()) s.push_back(t.value->storage());
  return s;
}

void restore(nn::Sequential<float>& net, const Snapshot& s) {
  auto state = net.state();
  for (std::size_t i = 0; i < state.size(); ++i) state[i].value->storage() = s[i];
}

}  // namespace

Architecture parse_architecture(std::string_view name) {
  if (name == "cnndetector") return Architecture::cnndetector;
  if (name == "radionet") return Architecture::radionet;
  throw ConfigError("unknown architecture '" + std::string(name) + "' (expected cnndetector or radionet)");
}

std::string_view to_string(Architecture a) { return a == Architecture::cnndetector ? "cnndetector" : "radionet"; }

std::vector<LayerSpec> cnndetector_layers(std::size_t num_classes) {
  const std::size_t filters[5] = {128, 128, 128, 256, 128};
  std::vector<LayerSpec> s;
  for (std::size_t i = 0; i < 5; ++i) {
    s.push_back(LayerSpec::conv1d(filters[i], 3, 1, 1, false));
    s.push_back(LayerSpec::batchnorm());
    s.push_back(LayerSpec::relu());
    if (i >= 1) s.push_back(LayerSpec::maxpool(2, 2));
    if (i == 3) s.push_back(LayerSpec::dropout(0.4));
  }
  s.push_back(LayerSpec::dense(num_classes));
  return s;
}

std::vector<LayerSpec> radionet_layers(std::size_t num_classes) {
  std::vector<LayerSpec> s;
  s.push_back(LayerSpec::conv1d(64, 7, 2, 3, false));
  s.push_back(LayerSpec::batchnorm());
  s.push_back(LayerSpec::relu());
  s.push_back(LayerSpec::maxpool(2, 2));
  const std::size_t blocks[4] = {3, 4, 6, 3};
  const std::size_t filters[4] = {64, 128, 256, 512};
  for (std::size_t stage = 0; stage < 4; ++stage) {
    for (std::size_t b = 0; b < blocks[stage]; ++b) {
      const bool down = stage > 0 && b == 0;
      s.push_back(LayerSpec::residual_block(filters[stage], down ? 2 : 1, down));
    }
  }
  s.push_back(LayerSpec::global_avgpool());
  s.push_back(LayerSpec::dense(num_classes));
  return s;
}

DetectorModel assemble_detector(Architecture a, std::size_t input_width, std::size_t num_classes,
                                const std::vector<LayerSpec>& layers, std::uint64_t seed) {
  check_build(input_width, num_classes);
  DetectorModel m;
  m.architecture = a;
  m.input_width = input_width;
  m.num_classes = num_classes;
  try {
    m.net = nn::Sequential<float>({1, input_width}, layers, seed);
  } catch (const ShapeError& e) {
    throw ConfigError("model: input width " + std::to_string(input_width) + " does not fit " +
                      std::string(to_string(a)) + ": " + e.what());
  }
  const auto out = m.net.output_shape();
  if (out.size() != 1 || out[0] != num_classes) {
    throw ConfigError("model: final layer width " + nn::to_string(out) + " does not equal num_classes " +
                      std::to_string(num_classes));
  }
  return m;
}

DetectorModel build_detector(Architecture a, std::size_t input_width, std::size_t num_classes, Rng& rng) {
  check_build(input_width, num_classes);
  const auto layers = a == Architecture::cnndetector ? cnndetector_layers(num_classes) : radionet_layers(num_classes);
  DetectorModel m = assemble_detector(a, input_width, num_classes, layers, rng());
  m.net.initialize(rng);
  return m;
}

DetectorModel build_cnndetector(std::size_t input_width, std::size_t num_classes, Rng& rng) {
  return build_detector(Architecture::cnndetector, input_width, num_classes, rng);
}

DetectorModel build_radionet(std::size_t input_width, std::size_t num_classes, Rng& rng) {
  return build_detector(Architecture::radionet, input_width, num_classes, rng);
}

std::size_t argmax(std::span<const float> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

Tensor<float> logits(const DetectorModel& model, std::span<const float> rows) {
  const std::size_t w = model.input_width;
  if (w == 0 || rows.size() % w != 0) {
    throw DataError("feature block of " + std::to_string(rows.size()) + " values does not match model width " +
                    std::to_string(w));
  }
  const std::size_t count = rows.size() / w;
  Tensor<float> out({count, model.num_classes});
  for (std::size_t start = 0; start < count; start += kInferBatch) {
    const std::size_t b = std::min(kInferBatch, count - start);
    Tensor<float> x({b, 1, w}, std::vector<float>(rows.begin() + start * w, rows.begin() + (start + b) * w));
    const auto y = model.net.infer(x);
    std::copy(y.data(), y.data() + y.size(), out.data() + start * model.num_classes);
  }
  return out;
}

std::vector<std::size_t> predict(const DetectorModel& model, std::span<const float> rows) {
  const auto y = logits(model, rows);
  const std::size_t c = model.num_classes;
  std::vector<std::size_t> labels(y.size() / c);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = argmax(y.values().subspan(i * c, c));
  return labels;
}

std::vector<std::size_t> predict(const DetectorModel& model, const LabeledDataset& data) {
  if (data.empty()) return {};
  if (data.width != model.input_width) {
    throw DataError("dataset width " + std::to_string(data.width) + " does not match model width " +
                    std::to_string(model.input_width));
  }
  return predict(model, std::span<const float>(data.features));
}

std::vector<double> predict_proba(const DetectorModel& model, std::span<const float> row) {
  const auto y = logits(model, row);
  if (y.dim(0) != 1) throw DataError("predict_proba expects exactly one feature row");
  const auto p = nn::ops::softmax(y);
  return {p.data(), p.data() + p.size()};
}

double accuracy(const DetectorModel& model, const LabeledDataset& data) {
  if (data.empty()) return 0.0;
  const auto pred = predict(model, data);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.label(i);
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

TrainHistory train_detector(DetectorModel& model, const LabeledDataset& train, const LabeledDataset& val,
                            const nn::TrainConfig& config, const EpochCallback& on_epoch) {
  nn::validate(config);
  check_dataset(model, train, "training");
  check_dataset(model, val, "validation");
  TrainHistory history;
  if (config.epochs == 0) return history;
  if (train.size() < 2) throw DataError("training needs at least 2 frames (batch norm statistics)");

  const std::size_t w = model.input_width;
  const std::size_t c = model.num_classes;
  nn::SgdOptimizer<float> opt(config);
  auto params = model.net.parameters();
  Snapshot best;
  history.best_val_accuracy = -1.0;

  std::vector<std::size_t> order(train.size());
  std::vector<float> batch_x;
  std::vector<std::size_t> batch_y;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = substream(config.seed, kShuffleTag, epoch);
    std::shuffle(order.begin(), order.end(), shuffle);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t step = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t b = std::min(config.batch_size, order.size() - start);
      if (b < 2) break;  // a single-sample batch has no batch-norm statistics
      batch_x.resize(b * w);
      batch_y.resize(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto r = train.row(order[start + i]);
        std::copy(r.begin(), r.end(), batch_x.begin() + i * w);
        batch_y[i] = train.label(order[start + i]);
      }
      Tensor<float> x({b, 1, w}, batch_x);
      model.net.zero_grad();
      const auto out = model.net.forward(x);
      auto loss = nn::ops::softmax_cross_entropy(out, nn::ops::one_hot<float>(batch_y, c));
      ++step;
      if (!std::isfinite(loss.loss)) {
        throw DivergenceError("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(step));
      }
      model.net.backward(loss.gradient);
      opt.step(params);
      loss_sum += loss.loss * static_cast<double>(b);
      seen += b;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    rec.val_accuracy = accuracy(model, val);
    history.epochs.push_back(rec);
    ++model.meta.epochs_seen;
    if (!val.empty() && rec.val_accuracy > history.best_val_accuracy) {
      history.best_val_accuracy = rec.val_accuracy;
      history.best_epoch = epoch;
      best = snapshot(model.net);
    }
    if (on_epoch) on_epoch(rec);
  }
  if (val.empty()) {
    history.best_epoch = config.epochs;
    history.best_val_accuracy = 0.0;
  } else {
    restore(model.net, best);
  }
  model.meta.config_hash = train_digest(config, train);
  return history;
}

namespace {

std::size_t classify(const DetectorModel& model, const FeatureVector& f) {
  if (f.values.size() != model.input_width) {
    throw DataError("frame features have width " + std::to_string(f.values.size()) + ", model expects " +
                    std::to_string(model.input_width));
  }
  std::vector<float> row(f.values.begin(), f.values.end());
  return predict(model, row).front();
}

}  // namespace

std::size_t detect_sources(const DetectorModel& model, const Frame& frame) {
  return classify(model, extract_features(autocorrelation(frame)));
}

std::size_t detect_sources_coherent(const DetectorModel& model, const Frame& frame, std::size_t subarray_size) {
  if (feature_width(subarray_size) != model.input_width) {
    throw DataError("subarray size " + std::to_string(subarray_size) + " gives feature width " +
                    std::to_string(feature_width(subarray_size)) + ", model expects " +
                    std::to_string(model.input_width));
  }
  return classify(model, extract_features(fbss(autocorrelation(frame), subarray_size)));
}

}  // namespace srcount
