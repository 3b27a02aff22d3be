#include "srcount/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "srcount/config.hpp"
#include "srcount/covariance.hpp"
#include "srcount/detectors.hpp"
#include "srcount/errors.hpp"
#include "srcount/evalkit.hpp"
#include "srcount/io.hpp"

namespace srcount {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kModelTag = 0x4d4f44454cULL;

json report_json(const std::string& detector, const EvalReport& r) {
  json confusion = json::array();
  for (std::size_t t = 0; t < r.num_classes; ++t) {
    json row = json::array();
    for (std::size_t p = 0; p < r.num_classes; ++p) row.push_back(r.at(t, p));
    confusion.push_back(std::move(row));
  }
  return {{"detector", detector},   {"accuracy", r.accuracy}, {"total", r.total},
          {"num_classes", r.num_classes}, {"support", r.support}, {"precision", r.precision},
          {"recall", r.recall},       {"f1", r.f1},             {"confusion", std::move(confusion)}};
}

std::string history_tsv(const std::vector<EpochRecord>& epochs) {
  std::ostringstream os;
  os << "epoch\ttrain_loss\tval_accuracy\n" << std::setprecision(8);
  for (const auto& e : epochs) os << e.epoch << '\t' << e.train_loss << '\t' << e.val_accuracy << '\n';
  return os.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

DetectorModel fresh_model(const RunConfig& c) {
  Rng rng = substream(c.seed, kModelTag, 0);
  return build_detector(c.architecture, c.input_width(), c.num_classes, rng);
}

// Trains model per config: an optional curriculum phase on the frames
// without coherent replicas, then the full set. Epoch numbers run on
// across phases.
std::vector<EpochRecord> train_with_config(DetectorModel& model, const RunConfig& c, const LabeledDataset& train,
                                           const LabeledDataset& val, std::ostream* log) {
  std::vector<EpochRecord> all;
  std::size_t offset = 0;
  auto run = [&](const LabeledDataset& data, nn::TrainConfig tc) {
    const auto h = train_detector(model, data, val, tc, [&](const EpochRecord& e) {
      if (log) *log << "epoch " << offset + e.epoch << " loss " << e.train_loss << " val " << e.val_accuracy << '\n';
    });
    for (auto e : h.epochs) {
      e.epoch += offset;
      all.push_back(e);
    }
    offset += h.epochs.size();
  };
  if (c.curriculum_epochs > 0) {
    const auto plain = train.filter([&](std::size_t i) { return train.labels_total[i] == train.labels_noncoherent[i]; });
    nn::TrainConfig phase = c.train;
    phase.epochs = c.curriculum_epochs;
    phase.seed = splitmix64(c.train.seed);
    run(plain, phase);
  }
  run(train, c.train);
  return all;
}

LabeledDataset load_dataset(const fs::path& path, LabelSemantics semantics) {
  return io::decode_dataset(io::read_file(path), semantics);
}

struct Options {
  std::string config, out, split = "train", kind = "features", train, val, history, resume, checkpoint, baseline,
      data, labels, frames, sweep_kind;
  std::size_t count = 0, index = 0, fbss = 0, sweep_frames = 0, classes = 0;
  bool has_count = false, deterministic = false;
};

int cmd_generate(const Options& o, std::ostream& out) {
  RunConfig c = load_config(o.config);
  GenerationConfig g = c.generation(parse_split(o.split));
  if (o.has_count) g.count = o.count;
  const ArrayGeometry geometry = c.geometry();
  if (o.kind == "features") {
    io::write_file(o.out, io::encode_dataset(build_dataset(geometry, g)));
  } else if (o.kind == "frames") {
    io::write_file(o.out, io::encode_frames(build_frames(geometry, g)));
  } else {
    throw ConfigError("--kind: expected features or frames");
  }
  out << "wrote " << g.count << " " << o.kind << " records to " << o.out << '\n';
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig c = load_config(o.config);
  c.train.deterministic = c.train.deterministic || o.deterministic;
  const auto semantics = c.scenario.semantics;
  const LabeledDataset train = load_dataset(o.train, semantics);
  const LabeledDataset val = o.val.empty() ? train.with_metadata() : load_dataset(o.val, semantics);
  DetectorModel model = o.resume.empty() ? fresh_model(c) : io::decode_checkpoint(io::read_file(o.resume)).model;
  if (model.input_width != c.input_width() || model.num_classes != c.num_classes) {
    throw DataError("checkpoint width/classes do not match the config");
  }
  const auto history = train_with_config(model, c, train, val, &out);
  io::write_file(o.out, io::encode_checkpoint(model, semantics));
  const std::string hist = o.history.empty() ? o.out + ".history.tsv" : o.history;
  io::write_text(hist, history_tsv(history));
  out << "checkpoint " << o.out << "\nhistory " << hist << '\n';
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  if (o.checkpoint.empty() == o.baseline.empty()) throw ConfigError("eval: give exactly one of --checkpoint or --baseline");
  std::unique_ptr<Detector> detector;
  LabelSemantics semantics = o.labels.empty() ? LabelSemantics::total : parse_label_semantics(o.labels);
  std::size_t classes = o.classes;
  if (!o.checkpoint.empty()) {
    auto ck = io::decode_checkpoint(io::read_file(o.checkpoint));
    if (o.labels.empty()) semantics = ck.semantics;
    classes = std::max(classes, ck.model.num_classes);
    detector = std::make_unique<LearnedDetector>("model", std::make_shared<DetectorModel>(std::move(ck.model)));
  } else if (o.baseline == "oracle") {
    detector = std::make_unique<OracleDetector>();
  } else {
    detector = std::make_unique<ClassicalDetector>(parse_criterion(o.baseline));
  }
  const LabeledDataset data = load_dataset(o.data, semantics);
  const EvalReport r = evaluate(*detector, data, classes);
  io::write_text(o.out + ".tsv", report_tsv(r));
  io::write_text(o.out + ".json", report_json(detector->name(), r).dump(2) + "\n");
  out << "accuracy " << std::setprecision(6) << std::fixed << r.accuracy << " over " << r.total << " frames\n";
  return 0;
}

int cmd_detect(const Options& o, std::ostream& out) {
  auto ck = io::decode_checkpoint(io::read_file(o.checkpoint));
  const auto frames = io::decode_frames(io::read_file(o.frames));
  if (o.index >= frames.size()) {
    throw DataError("--index " + std::to_string(o.index) + " is past the " + std::to_string(frames.size()) +
                    " frames in the file");
  }
  const Frame& frame = frames[o.index];
  CovMatrix r = autocorrelation(frame);
  if (o.fbss > 0) {
    if (feature_width(o.fbss) != ck.model.input_width) {
      throw DataError("--fbss " + std::to_string(o.fbss) + " gives feature width " +
                      std::to_string(feature_width(o.fbss)) + " but the model expects " +
                      std::to_string(ck.model.input_width));
    }
    r = fbss(r, o.fbss);
  }
  const auto f = extract_features(r);
  if (f.values.size() != ck.model.input_width) {
    throw DataError("frame gives feature width " + std::to_string(f.values.size()) + " but the model expects " +
                    std::to_string(ck.model.input_width));
  }
  const std::vector<float> row(f.values.begin(), f.values.end());
  const auto probs = predict_proba(ck.model, row);
  const std::size_t label = o.fbss > 0 ? detect_sources_coherent(ck.model, frame, o.fbss) : detect_sources(ck.model, frame);
  out << label << '\n';
  out << std::setprecision(6) << std::fixed;
  for (std::size_t k = 0; k < probs.size(); ++k) out << (k ? "\t" : "") << probs[k];
  out << '\n';
  return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  RunConfig c = load_config(o.config);
  if (c.sweep.detectors.empty()) throw ConfigError("sweep.detectors: at least one detector is required");
  const std::string kind = o.sweep_kind;
  if (kind != "sinr" && kind != "snapshots" && kind != "grid") {
    throw ConfigError("sweep kind must be sinr, snapshots or grid");
  }
  const ArrayGeometry geometry = c.geometry();
  const std::size_t frames = o.sweep_frames > 0 ? o.sweep_frames : c.sweep.frames_per_point;
  GenerationConfig base = c.generation(Split::test);

  std::vector<SweepEntry> entries;
  for (const auto& name : c.sweep.detectors) {
    SweepEntry e;
    e.name = name;
    if (name == "model") {
      if (kind == "snapshots") {
        e.retrain = [&c, &geometry, &out](std::size_t n) -> std::shared_ptr<const Detector> {
          RunConfig rc = c;
          rc.scenario.snapshots = n;
          const auto train = build_dataset(geometry, rc.generation(Split::train));
          const auto val = build_dataset(geometry, rc.generation(Split::val));
          DetectorModel m = fresh_model(rc);
          out << "retraining for N = " << n << '\n';
          train_with_config(m, rc, train, val, nullptr);
          return std::make_shared<LearnedDetector>("model", std::make_shared<DetectorModel>(std::move(m)));
        };
      } else {
        if (o.checkpoint.empty()) throw ConfigError("sweep: detector 'model' needs --checkpoint");
        auto ck = io::decode_checkpoint(io::read_file(o.checkpoint));
        e.detector = std::make_shared<LearnedDetector>("model", std::make_shared<DetectorModel>(std::move(ck.model)));
      }
    } else {
      e.detector = std::make_shared<ClassicalDetector>(parse_criterion(name));
    }
    entries.push_back(std::move(e));
  }

  ensure_dir(o.out);
  json summary;
  summary["kind"] = kind;
  summary["frames_per_point"] = frames;
  summary["seed"] = c.seed;
  summary["train_sinr_db"] = {c.scenario.sinr.low, c.scenario.sinr.high};
  if (kind == "grid") {
    const GridTable t = grid_coherent(entries, c.sweep.noncoherent, c.sweep.coherent, frames, geometry, base);
    json cells = json::array();
    for (const auto& cell : t.cells) {
      json acc;
      for (std::size_t d = 0; d < t.detectors.size(); ++d) acc[t.detectors[d]] = cell.accuracy[d];
      cells.push_back({{"noncoherent", cell.noncoherent}, {"coherent", cell.coherent}, {"accuracy", acc}});
    }
    summary["cells"] = std::move(cells);
    for (std::size_t d = 0; d < t.detectors.size(); ++d) {
      io::write_text(fs::path(o.out) / ("grid_" + t.detectors[d] + ".tsv"), grid_tsv(t, d));
    }
  } else {
    const SweepTable t = kind == "sinr" ? sweep_sinr(entries, c.sweep.sinr_db, frames, geometry, base)
                                        : sweep_snapshots(entries, c.sweep.snapshots, frames, geometry, base);
    summary["axis"] = t.axis;
    summary["points"] = t.points;
    json acc;
    for (std::size_t d = 0; d < t.detectors.size(); ++d) {
      acc[t.detectors[d]] = t.accuracy[d];
      io::write_text(fs::path(o.out) / (kind + "_" + t.detectors[d] + ".tsv"), sweep_tsv(t, d));
    }
    summary["accuracy"] = std::move(acc);
  }
  io::write_text(fs::path(o.out) / (kind + "_summary.json"), summary.dump(2) + "\n");
  out << "wrote " << kind << " sweep to " << o.out << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Source-count estimation for linear arrays"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("generate", "simulate frames and write a dataset file");
  gen->add_option("--config", o.config, "run config (JSON)")->required();
  gen->add_option("--split", o.split, "train, val or test");
  gen->add_option("--kind", o.kind, "features or frames");
  gen->add_option("--count", o.count, "override the split size");
  gen->add_option("--out", o.out, "output dataset path")->required();
  gen->add_flag("--deterministic", o.deterministic, "fixed reduction order");

  auto* train = app.add_subcommand("train", "train a detector and write a checkpoint");
  train->add_option("--config", o.config)->required();
  train->add_option("--train", o.train, "training dataset")->required();
  train->add_option("--val", o.val, "validation dataset");
  train->add_option("--out", o.out, "checkpoint path")->required();
  train->add_option("--history", o.history, "per-epoch history path");
  train->add_option("--resume", o.resume, "start from this checkpoint");
  train->add_flag("--deterministic", o.deterministic);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint or a baseline on a dataset");
  eval->add_option("--checkpoint", o.checkpoint);
  eval->add_option("--baseline", o.baseline, "mdl, aic or oracle");
  eval->add_option("--data", o.data)->required();
  eval->add_option("--labels", o.labels, "total or noncoherent");
  eval->add_option("--classes", o.classes, "minimum class count of the report");
  eval->add_option("--out", o.out, "report path prefix (.tsv and .json are appended)")->required();
  eval->add_flag("--deterministic", o.deterministic);

  auto* detect = app.add_subcommand("detect", "estimate the source count of one frame");
  detect->add_option("--checkpoint", o.checkpoint)->required();
  detect->add_option("--frames", o.frames, "raw frame file")->required();
  detect->add_option("--index", o.index, "frame index in the file");
  detect->add_option("--fbss", o.fbss, "smooth with subarrays of this size first");
  detect->add_flag("--deterministic", o.deterministic);

  auto* sweep = app.add_subcommand("sweep", "accuracy against SINR, snapshots or coherent counts");
  sweep->add_option("kind", o.sweep_kind, "sinr, snapshots or grid")->required();
  sweep->add_option("--config", o.config)->required();
  sweep->add_option("--checkpoint", o.checkpoint);
  sweep->add_option("--frames", o.sweep_frames, "frames per point (overrides the config)");
  sweep->add_option("--out", o.out, "output directory")->required();
  sweep->add_flag("--deterministic", o.deterministic);

  std::vector<std::string> argv_store{"srcount"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    o.has_count = gen->count("--count") > 0;
    if (gen->parsed()) return cmd_generate(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (detect->parsed()) return cmd_detect(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::config);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::config);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::io);
  }
  return static_cast<int>(ExitCode::config);
}

}  // namespace srcount
