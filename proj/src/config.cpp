#include "srcount/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "srcount/errors.hpp"
#include "srcount/io.hpp"

namespace srcount {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return as<T>(key);
  }

  template <class T>
  T as(const std::string& key) {
    used_.insert(key);
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned()) throw ConfigError(field(key) + ": expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
      } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
        if (!v.is_array()) throw ConfigError(field(key) + ": expected an array of non-negative integers");
        for (const auto& e : v) {
          if (!e.is_number_unsigned()) throw ConfigError(field(key) + ": expected an array of non-negative integers");
        }
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!v.is_array()) throw ConfigError(field(key) + ": expected an array of numbers");
        for (const auto& e : v) {
          if (!e.is_number()) throw ConfigError(field(key) + ": expected an array of numbers");
        }
      } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
        if (!v.is_array()) throw ConfigError(field(key) + ": expected an array of strings");
        for (const auto& e : v) {
          if (!e.is_string()) throw ConfigError(field(key) + ": expected an array of strings");
        }
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  Section child(const std::string& key) {
    used_.insert(key);
    return Section(j_.at(key), field(key));
  }
  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError(field(key) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class Fn>
auto checked(const std::string& field, Fn fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(field, 0) == 0) throw;
    throw ConfigError(field + ": " + msg);
  }
}

}  // namespace

GenerationConfig RunConfig::generation(Split split) const {
  GenerationConfig g = scenario;
  g.split = split;
  g.seed = seed;
  switch (split) {
    case Split::train: g.count = sizes.train; break;
    case Split::val: g.count = sizes.val; break;
    case Split::test: g.count = sizes.test; break;
  }
  return g;
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section top(root, "");
  c.seed = top.get<std::uint64_t>("seed", c.seed);

  if (top.has("geometry")) {
    Section g = top.child("geometry");
    c.elements = g.get<std::size_t>("elements", c.elements);
    c.spacing = g.get<double>("spacing", c.spacing);
    g.finish();
  }
  if (c.elements < 2) throw ConfigError("geometry.elements: must be >= 2");
  if (!(c.spacing > 0.0)) throw ConfigError("geometry.spacing: must be > 0");

  if (top.has("scenario")) {
    Section s = top.child("scenario");
    c.scenario.classes = s.get("classes", c.scenario.classes);
    c.scenario.coherent_counts = s.get("coherent", c.scenario.coherent_counts);
    c.scenario.snapshots = s.get<std::size_t>("snapshots", c.scenario.snapshots);
    if (s.has("sinr_db")) {
      const json& v = s.raw("sinr_db");
      if (v.is_number()) {
        c.scenario.sinr = SinrPolicy::fixed(v.get<double>());
      } else {
        Section r(v, s.field("sinr_db"));
        c.scenario.sinr = SinrPolicy::uniform(r.as<double>("low"), r.as<double>("high"));
        r.finish();
      }
    }
    c.scenario.min_separation_deg = s.get<double>("min_separation_deg", c.scenario.min_separation_deg);
    if (s.has("labels")) {
      c.scenario.semantics =
          checked(s.field("labels"), [&] { return parse_label_semantics(s.as<std::string>("labels")); });
    }
    s.finish();
  }
  if (c.scenario.classes.empty()) {
    for (std::size_t k = 0; k < c.elements; ++k) c.scenario.classes.push_back(k);
  }

  if (top.has("pipeline")) {
    Section p = top.child("pipeline");
    c.scenario.pipeline = checked(p.field("kind"), [&] { return parse_pipeline(p.as<std::string>("kind")); });
    c.scenario.subarray_size = p.get<std::size_t>("subarray_size", c.scenario.subarray_size);
    p.finish();
  }

  if (top.has("dataset")) {
    Section d = top.child("dataset");
    c.sizes.train = d.get<std::size_t>("train", c.sizes.train);
    c.sizes.val = d.get<std::size_t>("val", c.sizes.val);
    c.sizes.test = d.get<std::size_t>("test", c.sizes.test);
    d.finish();
  }

  if (top.has("model")) {
    Section m = top.child("model");
    if (m.has("architecture")) {
      c.architecture = checked(m.field("architecture"),
                               [&] { return parse_architecture(m.as<std::string>("architecture")); });
    }
    c.num_classes = m.get<std::size_t>("num_classes", c.num_classes);
    m.finish();
  }

  c.train.seed = c.seed;
  if (top.has("train")) {
    Section t = top.child("train");
    c.train.learning_rate = t.get<double>("learning_rate", c.train.learning_rate);
    c.train.momentum = t.get<double>("momentum", c.train.momentum);
    c.train.nesterov = t.get<bool>("nesterov", c.train.nesterov);
    c.train.batch_size = t.get<std::size_t>("batch_size", c.train.batch_size);
    c.train.epochs = t.get<std::size_t>("epochs", c.train.epochs);
    c.curriculum_epochs = t.get<std::size_t>("curriculum_epochs", c.curriculum_epochs);
    const auto loss = t.get<std::string>("loss", "categorical_cross_entropy");
    if (loss != "categorical_cross_entropy") {
      throw ConfigError("train.loss: only categorical_cross_entropy is supported");
    }
    t.finish();
  }
  nn::validate(c.train);

  if (top.has("sweep")) {
    Section s = top.child("sweep");
    c.sweep.detectors = s.get("detectors", c.sweep.detectors);
    c.sweep.sinr_db = s.get("sinr_db", c.sweep.sinr_db);
    c.sweep.snapshots = s.get("snapshots", c.sweep.snapshots);
    c.sweep.noncoherent = s.get("noncoherent", c.sweep.noncoherent);
    c.sweep.coherent = s.get("coherent", c.sweep.coherent);
    c.sweep.frames_per_point = s.get<std::size_t>("frames_per_point", c.sweep.frames_per_point);
    s.finish();
    for (const auto& d : c.sweep.detectors) {
      if (d != "mdl" && d != "aic" && d != "model") {
        throw ConfigError("sweep.detectors: unknown detector '" + d + "' (expected mdl, aic or model)");
      }
    }
  }

  if (top.has("io")) {
    Section i = top.child("io");
    c.out_dir = i.get<std::string>("out_dir", c.out_dir.string());
    i.finish();
  }
  top.finish();

  // Cross-field checks.
  const ArrayGeometry geometry = c.geometry();
  checked("scenario", [&] {
    validate(geometry, c.generation(Split::train));
    return 0;
  });
  std::size_t max_label = 0;
  for (std::size_t nc : c.scenario.classes) {
    std::size_t k_max = 0;
    for (std::size_t k : c.scenario.coherent_counts) {
      if (nc + k + 1 <= geometry.size() && (k == 0 || nc > 0)) k_max = std::max(k_max, k);
    }
    max_label = std::max(max_label, c.scenario.semantics == LabelSemantics::total ? nc + k_max : nc);
  }
  if (c.num_classes <= max_label) {
    throw ConfigError("model.num_classes: " + std::to_string(c.num_classes) + " classes cannot represent label " +
                      std::to_string(max_label));
  }
  if (c.input_width() < kMinInputWidth) {
    throw ConfigError("pipeline: feature width " + std::to_string(c.input_width()) + " is below the model minimum " +
                      std::to_string(kMinInputWidth));
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return parse_config(std::string(bytes.begin(), bytes.end()));
}

std::string dump_config(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["geometry"] = {{"elements", c.elements}, {"spacing", c.spacing}};
  json sinr = c.scenario.sinr.is_fixed() ? json(c.scenario.sinr.low)
                                         : json{{"low", c.scenario.sinr.low}, {"high", c.scenario.sinr.high}};
  j["scenario"] = {{"classes", c.scenario.classes},
                   {"coherent", c.scenario.coherent_counts},
                   {"snapshots", c.scenario.snapshots},
                   {"sinr_db", sinr},
                   {"min_separation_deg", c.scenario.min_separation_deg},
                   {"labels", std::string(to_string(c.scenario.semantics))}};
  j["pipeline"] = {{"kind", std::string(to_string(c.scenario.pipeline))},
                   {"subarray_size", c.scenario.subarray_size}};
  j["dataset"] = {{"train", c.sizes.train}, {"val", c.sizes.val}, {"test", c.sizes.test}};
  j["model"] = {{"architecture", std::string(to_string(c.architecture))}, {"num_classes", c.num_classes}};
  j["train"] = {{"learning_rate", c.train.learning_rate}, {"momentum", c.train.momentum},
                {"nesterov", c.train.nesterov},         {"batch_size", c.train.batch_size},
                {"epochs", c.train.epochs},             {"curriculum_epochs", c.curriculum_epochs},
                {"loss", "categorical_cross_entropy"}};
  j["sweep"] = {{"detectors", c.sweep.detectors},     {"sinr_db", c.sweep.sinr_db},
                {"snapshots", c.sweep.snapshots},     {"noncoherent", c.sweep.noncoherent},
                {"coherent", c.sweep.coherent},       {"frames_per_point", c.sweep.frames_per_point}};
  j["io"] = {{"out_dir", c.out_dir.string()}};
  return j.dump(2) + "\n";
}

}  // namespace srcount
