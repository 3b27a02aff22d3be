#include "srcount/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <sstream>
#include <thread>

#include "srcount/covariance.hpp"
#include "srcount/errors.hpp"

namespace srcount {

namespace {

std::uint64_t split_tag(Split s) { return 0x53504c4954ULL + static_cast<std::uint64_t>(s); }

std::uint64_t point_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed ^ splitmix64(0x5357454550ULL + index));
}

std::vector<std::size_t> feasible_coherent(const ArrayGeometry& g, const GenerationConfig& c, std::size_t nc) {
  std::vector<std::size_t> out;
  for (std::size_t k : c.coherent_counts) {
    if (nc + k + 1 > g.size()) continue;
    if (k > 0 && nc == 0) continue;
    out.push_back(k);
  }
  return out;
}

// Runs fn(i) for i in [0, count) on up to worker_threads() threads. Each
// index is independent, so the result does not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t count, Fn fn) {
  const std::size_t workers = std::min(worker_threads(), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed << v;
  return os.str();
}

}  // namespace

std::size_t GenerationConfig::cov_side(const ArrayGeometry& g) const {
  return pipeline == Pipeline::plain ? g.size() : subarray_size;
}

std::string GenerationConfig::describe(const ArrayGeometry& g) const {
  std::ostringstream os;
  os << std::setprecision(17) << "offsets=";
  for (double d : g.offsets()) os << d << ',';
  os << ";classes=";
  for (auto c : classes) os << c << ',';
  os << ";coherent=";
  for (auto c : coherent_counts) os << c << ',';
  os << ";N=" << snapshots << ";sinr=" << sinr.low << ',' << sinr.high << ";minsep=" << min_separation_deg
     << ";pipeline=" << to_string(pipeline) << ";L0=" << (pipeline == Pipeline::fbss ? subarray_size : 0)
     << ";labels=" << to_string(semantics) << ";count=" << count << ";seed=" << seed << ";split=" << to_string(split);
  return os.str();
}

void validate(const ArrayGeometry& geometry, const GenerationConfig& c) {
  if (c.classes.empty() && c.count > 0) throw ConfigError("scenario.classes: must not be empty");
  if (c.coherent_counts.empty()) throw ConfigError("scenario.coherent: must not be empty");
  if (c.snapshots < 1) throw ConfigError("scenario.snapshots: must be >= 1");
  if (!(c.sinr.low <= c.sinr.high) || !std::isfinite(c.sinr.low) || !std::isfinite(c.sinr.high)) {
    throw ConfigError("scenario.sinr: need finite low <= high");
  }
  if (!(c.min_separation_deg >= 0.0)) throw ConfigError("scenario.min_separation_deg: must be >= 0");
  if (c.pipeline == Pipeline::fbss && (c.subarray_size < 2 || c.subarray_size > geometry.size())) {
    throw ConfigError("scenario.subarray_size: must lie in [2, " + std::to_string(geometry.size()) + "]");
  }
  for (std::size_t nc : c.classes) {
    if (feasible_coherent(geometry, c, nc).empty()) {
      throw ConfigError("scenario.classes: class " + std::to_string(nc) + " is infeasible on a " +
                        std::to_string(geometry.size()) + "-element array (at most " +
                        std::to_string(geometry.size() - 1) + " sources)");
    }
  }
  const std::size_t max_sources = geometry.size() - 1;
  const double span = 2.0 * kMaxSourceAngleDeg;
  if (max_sources > 1 && c.min_separation_deg * static_cast<double>(max_sources - 1) > span) {
    throw ConfigError("scenario.min_separation_deg: too large to place the configured sources");
  }
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("SRCOUNT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return 1;
}

Frame generate_frame(const ArrayGeometry& geometry, const GenerationConfig& c, std::size_t index) {
  Rng rng = substream(c.seed, split_tag(c.split), index);
  std::uniform_int_distribution<std::size_t> pick_class(0, c.classes.size() - 1);
  const std::size_t nc = c.classes[pick_class(rng)];
  const auto options = feasible_coherent(geometry, c, nc);
  std::uniform_int_distribution<std::size_t> pick_coherent(0, options.size() - 1);
  const std::size_t k = options[pick_coherent(rng)];
  const double sinr = c.sinr.is_fixed() ? c.sinr.low : std::uniform_real_distribution<double>(c.sinr.low, c.sinr.high)(rng);
  const Scenario s = random_scenario(nc, k, c.snapshots, sinr, c.min_separation_deg, rng);
  return sample_frame(geometry, s);
}

std::vector<double> frame_features(const Frame& frame, const GenerationConfig& c) {
  CovMatrix r = autocorrelation(frame);
  if (c.pipeline == Pipeline::fbss) r = fbss(r, c.subarray_size);
  return extract_features(r).values;
}

LabeledDataset build_dataset(const ArrayGeometry& geometry, const GenerationConfig& c) {
  validate(geometry, c);
  LabeledDataset d;
  d.width = c.width(geometry);
  d.semantics = c.semantics;
  d.elements = geometry.size();
  d.cov_side = c.cov_side(geometry);
  d.snapshots = c.snapshots;
  d.split = c.split;
  d.provenance = hex64(fnv1a64(c.describe(geometry)));
  d.features.resize(c.count * d.width);
  d.labels_total.resize(c.count);
  d.labels_noncoherent.resize(c.count);
  parallel_for(c.count, [&](std::size_t i) {
    const Frame f = generate_frame(geometry, c, i);
    const auto row = frame_features(f, c);
    std::transform(row.begin(), row.end(), d.features.begin() + i * d.width,
                   [](double v) { return static_cast<float>(v); });
    d.labels_total[i] = static_cast<std::uint16_t>(f.label_total);
    d.labels_noncoherent[i] = static_cast<std::uint16_t>(f.label_noncoherent);
  });
  return d;
}

std::vector<Frame> build_frames(const ArrayGeometry& geometry, const GenerationConfig& c) {
  validate(geometry, c);
  std::vector<Frame> frames(c.count);
  parallel_for(c.count, [&](std::size_t i) { frames[i] = generate_frame(geometry, c, i); });
  return frames;
}

std::vector<std::size_t> LearnedDetector::predict(const LabeledDataset& data) const {
  return srcount::predict(*model_, data);
}

std::vector<std::size_t> ClassicalDetector::predict(const LabeledDataset& data) const {
  std::vector<std::size_t> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const CMatrix r = covariance_from_features<float>(data.row(i), data.cov_side);
    out[i] = criterion_curve(criterion_, eigvalsh(r), data.snapshots).argmin;
  });
  return out;
}

EvalReport evaluate(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                    std::size_t min_classes) {
  if (truth.size() != predicted.size()) throw DataError("prediction count does not match label count");
  std::size_t c = min_classes;
  for (auto t : truth) c = std::max(c, t + 1);
  for (auto p : predicted) c = std::max(c, p + 1);
  EvalReport r;
  r.num_classes = c;
  r.confusion.assign(c * c, 0);
  r.support.assign(c, 0);
  r.total = truth.size();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++r.confusion[truth[i] * c + predicted[i]];
    ++r.support[truth[i]];
    hits += truth[i] == predicted[i];
  }
  r.accuracy = safe_ratio(hits, r.total);
  r.precision.assign(c, 0.0);
  r.recall.assign(c, 0.0);
  r.f1.assign(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t col = 0;
    for (std::size_t t = 0; t < c; ++t) col += r.confusion[t * c + k];
    const std::size_t tp = r.confusion[k * c + k];
    r.precision[k] = safe_ratio(tp, col);
    r.recall[k] = safe_ratio(tp, r.support[k]);
    const double s = r.precision[k] + r.recall[k];
    r.f1[k] = s > 0.0 ? 2.0 * r.precision[k] * r.recall[k] / s : 0.0;
  }
  return r;
}

EvalReport evaluate(const Detector& detector, const LabeledDataset& data, std::size_t min_classes) {
  const auto truth = data.labels();
  const auto pred = detector.predict(data);
  return evaluate(truth, pred, min_classes);
}

namespace {

std::vector<std::string> names(const std::vector<SweepEntry>& detectors) {
  std::vector<std::string> out;
  for (const auto& d : detectors) {
    if (!d.detector && !d.retrain) throw ConfigError("sweep detector '" + d.name + "' has nothing to evaluate");
    out.push_back(d.name);
  }
  return out;
}

}  // namespace

GenerationConfig point_config(const GenerationConfig& base, std::size_t frames, std::size_t index) {
  GenerationConfig c = base;
  c.count = frames;
  c.split = Split::test;
  c.seed = point_seed(base.seed, index);
  return c;
}

SweepTable sweep_sinr(const std::vector<SweepEntry>& detectors, const std::vector<double>& sinr_db,
                      std::size_t frames_per_point, const ArrayGeometry& geometry, const GenerationConfig& base) {
  SweepTable t;
  t.axis = "sinr_db";
  t.detectors = names(detectors);
  t.points = sinr_db;
  t.accuracy.assign(detectors.size(), {});
  for (std::size_t p = 0; p < sinr_db.size(); ++p) {
    GenerationConfig c = point_config(base, frames_per_point, p);
    c.sinr = SinrPolicy::fixed(sinr_db[p]);
    const auto data = build_dataset(geometry, c);
    for (std::size_t d = 0; d < detectors.size(); ++d) {
      if (!detectors[d].detector) throw ConfigError("sinr sweep needs a trained detector for '" + detectors[d].name + "'");
      t.accuracy[d].push_back(evaluate(*detectors[d].detector, data).accuracy);
    }
  }
  return t;
}

SweepTable sweep_snapshots(const std::vector<SweepEntry>& detectors, const std::vector<std::size_t>& snapshots,
                           std::size_t frames_per_point, const ArrayGeometry& geometry, const GenerationConfig& base) {
  SweepTable t;
  t.axis = "snapshots";
  t.detectors = names(detectors);
  t.accuracy.assign(detectors.size(), {});
  for (std::size_t p = 0; p < snapshots.size(); ++p) {
    t.points.push_back(static_cast<double>(snapshots[p]));
    GenerationConfig c = point_config(base, frames_per_point, p);
    c.snapshots = snapshots[p];
    const auto data = build_dataset(geometry, c);
    for (std::size_t d = 0; d < detectors.size(); ++d) {
      const auto det = detectors[d].retrain ? detectors[d].retrain(snapshots[p]) : detectors[d].detector;
      t.accuracy[d].push_back(evaluate(*det, data).accuracy);
    }
  }
  return t;
}

GridTable grid_coherent(const std::vector<SweepEntry>& detectors, const std::vector<std::size_t>& noncoherent,
                        const std::vector<std::size_t>& coherent, std::size_t frames_per_cell,
                        const ArrayGeometry& geometry, const GenerationConfig& base) {
  GridTable t;
  t.detectors = names(detectors);
  std::size_t index = 0;
  for (std::size_t nc : noncoherent) {
    for (std::size_t k : coherent) {
      const std::size_t cell = index++;
      if (nc + k + 1 > geometry.size() || (k > 0 && nc == 0)) continue;
      GenerationConfig c = point_config(base, frames_per_cell, cell);
      c.classes = {nc};
      c.coherent_counts = {k};
      const auto data = build_dataset(geometry, c);
      GridCell g{nc, k, {}};
      for (const auto& d : detectors) {
        if (!d.detector) throw ConfigError("grid needs a trained detector for '" + d.name + "'");
        g.accuracy.push_back(evaluate(*d.detector, data).accuracy);
      }
      t.cells.push_back(std::move(g));
    }
  }
  return t;
}

std::string sweep_tsv(const SweepTable& t, std::size_t d) {
  std::ostringstream os;
  os << t.axis << "\taccuracy\n";
  for (std::size_t p = 0; p < t.points.size(); ++p) os << t.points[p] << '\t' << fmt(t.accuracy.at(d)[p]) << '\n';
  return os.str();
}

std::string grid_tsv(const GridTable& t, std::size_t d) {
  std::ostringstream os;
  os << "noncoherent\tcoherent\taccuracy\n";
  for (const auto& c : t.cells) os << c.noncoherent << '\t' << c.coherent << '\t' << fmt(c.accuracy.at(d)) << '\n';
  return os.str();
}

std::string report_tsv(const EvalReport& r) {
  std::ostringstream os;
  os << "class\tsupport\tprecision\trecall\tf1";
  for (std::size_t k = 0; k < r.num_classes; ++k) os << "\tpred_" << k;
  os << '\n';
  for (std::size_t k = 0; k < r.num_classes; ++k) {
    os << k << '\t' << r.support[k] << '\t' << fmt(r.precision[k]) << '\t' << fmt(r.recall[k]) << '\t' << fmt(r.f1[k]);
    for (std::size_t p = 0; p < r.num_classes; ++p) os << '\t' << r.at(k, p);
    os << '\n';
  }
  os << "accuracy\t" << r.total << '\t' << fmt(r.accuracy) << '\n';
  return os.str();
}

}  // namespace srcount
