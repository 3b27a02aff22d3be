#include "srcount/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <json.hpp>
#include <system_error>
#include <unistd.h>

#include "srcount/covariance.hpp"
#include "srcount/errors.hpp"

namespace srcount::io {

using nlohmann::json;

namespace {

constexpr char kDatasetMagic[4] = {'S', 'D', 'S', '1'};
constexpr char kCheckpointMagic[4] = {'S', 'C', 'K', '1'};

class Writer {
 public:
  template <class U>
  void put(U v) {
    static_assert(std::is_trivially_copyable_v<U>);
    unsigned char raw[sizeof(U)];
    std::memcpy(raw, &v, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(U));
    bytes_.insert(bytes_.end(), raw, raw + sizeof(U));
  }
  void raw(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }
  void floats(std::span<const float> v) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(v.data(), v.size() * sizeof(float));
    } else {
      for (float f : v) put(f);
    }
  }
  Bytes& bytes() { return bytes_; }

 private:
  Bytes bytes_;
};

class Reader {
 public:
  Reader(const Bytes& b, const char* what) : b_(b), what_(what) {}
  template <class U>
  U get() {
    need(sizeof(U));
    unsigned char raw[sizeof(U)];
    std::memcpy(raw, b_.data() + pos_, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(U));
    pos_ += sizeof(U);
    U v;
    std::memcpy(&v, raw, sizeof(U));
    return v;
  }
  void raw(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, b_.data() + pos_, n);
    pos_ += n;
  }
  void floats(std::span<float> out) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(out.data(), out.size() * sizeof(float));
    } else {
      for (float& f : out) f = get<float>();
    }
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) {
    if (n > remaining()) throw CorruptionError(std::string(what_) + ": truncated file");
  }
  const Bytes& b_;
  const char* what_;
  std::size_t pos_ = 0;
};

void put_header(Writer& w, const DatasetHeader& h) {
  w.raw(kDatasetMagic, 4);
  w.put(h.version);
  w.put(static_cast<std::uint8_t>(h.kind));
  w.put(h.elements);
  w.put(h.cov_side);
  w.put(h.snapshots);
  w.put(h.count);
  w.put(h.label_arity);
}

DatasetHeader get_header(Reader& r) {
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kDatasetMagic, 4) != 0) throw CorruptionError("dataset: bad magic (expected SDS1)");
  DatasetHeader h;
  h.version = r.get<std::uint16_t>();
  if (h.version != kDatasetVersion) throw CorruptionError("dataset: unsupported version " + std::to_string(h.version));
  const auto kind = r.get<std::uint8_t>();
  if (kind > 1) throw CorruptionError("dataset: unknown payload kind " + std::to_string(kind));
  h.kind = static_cast<PayloadKind>(kind);
  h.elements = r.get<std::uint16_t>();
  h.cov_side = r.get<std::uint16_t>();
  h.snapshots = r.get<std::uint32_t>();
  h.count = r.get<std::uint32_t>();
  h.label_arity = r.get<std::uint8_t>();
  if (h.label_arity < 1 || h.label_arity > 2) {
    throw CorruptionError("dataset: label arity " + std::to_string(h.label_arity) + " (expected 1 or 2)");
  }
  return h;
}

template <class U>
U narrow(std::size_t v, const char* field) {
  if (v > std::numeric_limits<U>::max()) throw DataError(std::string("dataset field ") + field + " overflows");
  return static_cast<U>(v);
}

std::uint64_t checksum(const Bytes& b, std::size_t n) { return fnv1a64({b.data(), n}); }

json spec_to_json(const nn::LayerSpec& s) {
  using nn::LayerKind;
  json j;
  j["kind"] = std::string(to_string(s.kind));
  switch (s.kind) {
    case LayerKind::conv1d:
      j["filters"] = s.filters;
      j["kernel"] = s.kernel;
      j["stride"] = s.stride;
      j["padding"] = s.padding;
      j["bias"] = s.bias;
      break;
    case LayerKind::batchnorm:
      j["momentum"] = s.bn_momentum;
      j["epsilon"] = s.bn_epsilon;
      break;
    case LayerKind::maxpool:
    case LayerKind::avgpool:
      j["pool"] = s.pool;
      j["stride"] = s.stride;
      break;
    case LayerKind::dropout: j["rate"] = s.rate; break;
    case LayerKind::dense: j["units"] = s.units; break;
    case LayerKind::residual_block:
      j["filters"] = s.filters;
      j["stride"] = s.stride;
      j["projection"] = s.projection;
      j["momentum"] = s.bn_momentum;
      j["epsilon"] = s.bn_epsilon;
      break;
    case LayerKind::relu: break;
  }
  return j;
}

nn::LayerSpec spec_from_json(const json& j) {
  using nn::LayerKind;
  using nn::LayerSpec;
  const LayerKind k = nn::parse_layer_kind(j.at("kind").get<std::string>());
  LayerSpec s;
  switch (k) {
    case LayerKind::conv1d:
      s = LayerSpec::conv1d(j.at("filters"), j.at("kernel"), j.at("stride"), j.at("padding"), j.at("bias"));
      break;
    case LayerKind::batchnorm:
      s = LayerSpec::batchnorm();
      s.bn_momentum = j.at("momentum");
      s.bn_epsilon = j.at("epsilon");
      break;
    case LayerKind::maxpool: s = LayerSpec::maxpool(j.at("pool"), j.at("stride")); break;
    case LayerKind::avgpool:
      s = j.at("pool").get<std::size_t>() == 0 ? LayerSpec::global_avgpool()
                                               : LayerSpec::avgpool(j.at("pool"), j.at("stride"));
      break;
    case LayerKind::dropout: s = LayerSpec::dropout(j.at("rate")); break;
    case LayerKind::dense: s = LayerSpec::dense(j.at("units")); break;
    case LayerKind::residual_block:
      s = LayerSpec::residual_block(j.at("filters"), j.at("stride"), j.at("projection"));
      s.bn_momentum = j.at("momentum");
      s.bn_epsilon = j.at("epsilon");
      break;
    case LayerKind::relu: s = LayerSpec::relu(); break;
  }
  nn::validate(s);
  return s;
}

}  // namespace

Bytes encode_dataset(const LabeledDataset& d) {
  if (d.features.size() != d.size() * d.width || d.labels_noncoherent.size() != d.size()) {
    throw DataError("dataset arrays are inconsistent");
  }
  if (d.width != feature_width(d.cov_side)) throw DataError("dataset width does not equal n(n+1)");
  DatasetHeader h;
  h.kind = PayloadKind::features;
  h.elements = narrow<std::uint16_t>(d.elements, "L");
  h.cov_side = narrow<std::uint16_t>(d.cov_side, "n");
  h.snapshots = narrow<std::uint32_t>(d.snapshots, "N");
  h.count = narrow<std::uint32_t>(d.size(), "count");
  Writer w;
  put_header(w, h);
  w.bytes().reserve(w.bytes().size() + d.size() * (4 + d.width * 4));
  for (std::size_t i = 0; i < d.size(); ++i) {
    w.put(d.labels_total[i]);
    w.put(d.labels_noncoherent[i]);
    w.floats(d.row(i));
  }
  return std::move(w.bytes());
}

DatasetHeader peek_header(const Bytes& bytes) {
  Reader r(bytes, "dataset");
  return get_header(r);
}

LabeledDataset decode_dataset(const Bytes& bytes, LabelSemantics semantics) {
  Reader r(bytes, "dataset");
  const DatasetHeader h = get_header(r);
  if (h.kind != PayloadKind::features) throw DataError("dataset holds raw frames, expected features");
  LabeledDataset d;
  d.width = feature_width(h.cov_side);
  d.semantics = semantics;
  d.elements = h.elements;
  d.cov_side = h.cov_side;
  d.snapshots = h.snapshots;
  const std::size_t record = 2 * h.label_arity + 4 * d.width;
  if (r.remaining() != static_cast<std::size_t>(h.count) * record) {
    throw CorruptionError("dataset: payload size does not match the header");
  }
  d.features.resize(static_cast<std::size_t>(h.count) * d.width);
  d.labels_total.resize(h.count);
  d.labels_noncoherent.resize(h.count);
  for (std::size_t i = 0; i < h.count; ++i) {
    d.labels_total[i] = r.get<std::uint16_t>();
    d.labels_noncoherent[i] = h.label_arity == 2 ? r.get<std::uint16_t>() : d.labels_total[i];
    r.floats({d.features.data() + i * d.width, d.width});
  }
  d.provenance = hex64(fnv1a64(bytes));
  return d;
}

Bytes encode_frames(const std::vector<Frame>& frames) {
  DatasetHeader h;
  h.kind = PayloadKind::raw_frames;
  if (!frames.empty()) {
    h.elements = narrow<std::uint16_t>(static_cast<std::size_t>(frames.front().data.rows()), "L");
    h.snapshots = narrow<std::uint32_t>(static_cast<std::size_t>(frames.front().data.cols()), "N");
  }
  h.cov_side = h.elements;
  h.count = narrow<std::uint32_t>(frames.size(), "count");
  Writer w;
  put_header(w, h);
  for (const auto& f : frames) {
    if (f.data.rows() != h.elements || f.data.cols() != static_cast<Eigen::Index>(h.snapshots)) {
      throw DataError("all frames in a file must share L and N");
    }
    w.put(static_cast<std::uint16_t>(f.label_total));
    w.put(static_cast<std::uint16_t>(f.label_noncoherent));
    for (Eigen::Index i = 0; i < f.data.rows(); ++i) {
      for (Eigen::Index n = 0; n < f.data.cols(); ++n) {
        w.put(static_cast<float>(f.data(i, n).real()));
        w.put(static_cast<float>(f.data(i, n).imag()));
      }
    }
  }
  return std::move(w.bytes());
}

std::vector<Frame> decode_frames(const Bytes& bytes) {
  Reader r(bytes, "frame file");
  const DatasetHeader h = get_header(r);
  if (h.kind != PayloadKind::raw_frames) throw DataError("frame file holds features, expected raw frames");
  const std::size_t values = 2ull * h.elements * h.snapshots;
  if (r.remaining() != static_cast<std::size_t>(h.count) * (2 * h.label_arity + 4 * values)) {
    throw CorruptionError("frame file: payload size does not match the header");
  }
  std::vector<Frame> frames(h.count);
  std::vector<float> buf(values);
  for (auto& f : frames) {
    f.label_total = r.get<std::uint16_t>();
    f.label_noncoherent = h.label_arity == 2 ? r.get<std::uint16_t>() : f.label_total;
    r.floats(buf);
    f.data.resize(h.elements, h.snapshots);
    for (std::size_t i = 0; i < h.elements; ++i) {
      for (std::size_t n = 0; n < h.snapshots; ++n) {
        const std::size_t k = 2 * (i * h.snapshots + n);
        f.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) = cplx(buf[k], buf[k + 1]);
      }
    }
  }
  return frames;
}

Bytes encode_checkpoint(DetectorModel& model, LabelSemantics semantics) {
  json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["architecture"] = std::string(to_string(model.architecture));
  manifest["input_width"] = model.input_width;
  manifest["num_classes"] = model.num_classes;
  manifest["labels"] = std::string(to_string(semantics));
  json layers = json::array();
  nn::Shape shape = model.net.input_shape();
  for (std::size_t i = 0; i < model.net.size(); ++i) {
    const auto& layer = model.net.layer(i);
    json j = spec_to_json(layer.spec());
    shape = layer.output_shape(shape);
    j["output_shape"] = shape;
    layers.push_back(std::move(j));
  }
  manifest["layers"] = std::move(layers);
  auto state = model.net.state();
  json tensors = json::array();
  for (const auto& t : state) tensors.push_back({{"name", t.name}, {"shape", t.value->shape()}});
  manifest["tensors"] = std::move(tensors);
  manifest["training"] = {{"epochs_seen", model.meta.epochs_seen}, {"config_hash", model.meta.config_hash}};
  const std::string text = manifest.dump();

  Writer w;
  w.raw(kCheckpointMagic, 4);
  w.put(narrow<std::uint32_t>(text.size(), "manifest"));
  w.raw(text.data(), text.size());
  for (const auto& t : state) {
    w.put(narrow<std::uint16_t>(t.name.size(), "tensor name"));
    w.raw(t.name.data(), t.name.size());
    w.put(narrow<std::uint8_t>(t.value->rank(), "tensor rank"));
    for (auto d : t.value->shape()) w.put(narrow<std::uint32_t>(d, "tensor dim"));
    w.put(static_cast<std::uint64_t>(t.value->size() * sizeof(float)));
    w.floats(t.value->values());
  }
  const std::uint64_t sum = checksum(w.bytes(), w.bytes().size());
  w.put(sum);
  return std::move(w.bytes());
}

LoadedCheckpoint decode_checkpoint(const Bytes& bytes) {
  if (bytes.size() < 16) throw CorruptionError("checkpoint: truncated file");
  const std::size_t body = bytes.size() - 8;
  {
    Bytes last(bytes.end() - 8, bytes.end());
    Reader r(last, "checkpoint");
    if (r.get<std::uint64_t>() != checksum(bytes, body)) throw CorruptionError("checkpoint: checksum mismatch");
  }
  Reader r(bytes, "checkpoint");
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw CorruptionError("checkpoint: bad magic (expected SCK1)");
  const auto len = r.get<std::uint32_t>();
  std::string text(len, '\0');
  r.raw(text.data(), len);
  json m;
  try {
    m = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("checkpoint: unreadable manifest: ") + e.what());
  }
  LoadedCheckpoint out;
  try {
    if (m.at("format_version").get<std::uint32_t>() != kCheckpointVersion) {
      throw CorruptionError("checkpoint: unsupported format version");
    }
    std::vector<nn::LayerSpec> layers;
    for (const auto& j : m.at("layers")) layers.push_back(spec_from_json(j));
    out.semantics = parse_label_semantics(m.at("labels").get<std::string>());
    out.model = assemble_detector(parse_architecture(m.at("architecture").get<std::string>()), m.at("input_width"),
                                  m.at("num_classes"), layers, 0);
    out.model.meta.epochs_seen = m.at("training").at("epochs_seen");
    out.model.meta.config_hash = m.at("training").at("config_hash");
    auto state = out.model.net.state();
    const auto& listed = m.at("tensors");
    if (listed.size() != state.size()) throw CorruptionError("checkpoint: tensor count does not match the layers");
    for (std::size_t i = 0; i < state.size(); ++i) {
      const auto name_len = r.get<std::uint16_t>();
      std::string name(name_len, '\0');
      r.raw(name.data(), name_len);
      const auto rank = r.get<std::uint8_t>();
      nn::Shape shape(rank);
      for (auto& d : shape) d = r.get<std::uint32_t>();
      const auto byte_len = r.get<std::uint64_t>();
      if (name != state[i].name || name != listed[i].at("name").get<std::string>() ||
          shape != state[i].value->shape() || shape != listed[i].at("shape").get<nn::Shape>() ||
          byte_len != state[i].value->size() * sizeof(float)) {
        throw CorruptionError("checkpoint: tensor record " + std::to_string(i) + " ('" + name +
                              "') does not match the manifest");
      }
      r.floats(state[i].value->values());
    }
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("checkpoint: malformed manifest: ") + e.what());
  } catch (const CorruptionError&) {
    throw;
  } catch (const Error& e) {
    throw CorruptionError(std::string("checkpoint: inconsistent manifest: ") + e.what());
  }
  if (r.pos() != body) throw CorruptionError("checkpoint: trailing bytes before the checksum");
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  Bytes b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return b;
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "'");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, Bytes(text.begin(), text.end()));
}

}  // namespace srcount::io
