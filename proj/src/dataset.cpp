#include "srcount/dataset.hpp"

#include <cstdio>

#include "srcount/errors.hpp"

namespace srcount {

LabelSemantics parse_label_semantics(std::string_view name) {
  if (name == "total") return LabelSemantics::total;
  if (name == "noncoherent") return LabelSemantics::noncoherent;
  throw ConfigError("unknown label semantics '" + std::string(name) + "' (expected total or noncoherent)");
}

std::string_view to_string(LabelSemantics s) { return s == LabelSemantics::total ? "total" : "noncoherent"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Pipeline parse_pipeline(std::string_view name) {
  if (name == "plain") return Pipeline::plain;
  if (name == "fbss") return Pipeline::fbss;
  throw ConfigError("unknown pipeline '" + std::string(name) + "' (expected plain or fbss)");
}

std::string_view to_string(Pipeline p) { return p == Pipeline::plain ? "plain" : "fbss"; }

std::vector<std::size_t> LabeledDataset::labels() const {
  std::vector<std::size_t> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = label(i);
  return out;
}

void LabeledDataset::push_back(std::span<const double> r, std::size_t total, std::size_t noncoherent) {
  if (r.size() != width) throw DataError("feature row width does not match the dataset");
  for (double v : r) features.push_back(static_cast<float>(v));
  labels_total.push_back(static_cast<std::uint16_t>(total));
  labels_noncoherent.push_back(static_cast<std::uint16_t>(noncoherent));
}

LabeledDataset LabeledDataset::with_metadata() const {
  LabeledDataset out;
  out.width = width;
  out.semantics = semantics;
  out.elements = elements;
  out.cov_side = cov_side;
  out.snapshots = snapshots;
  out.split = split;
  out.provenance = provenance;
  return out;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t state) {
  for (unsigned char b : bytes) {
    state ^= b;
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::uint64_t fnv1a64(std::string_view text) {
  return fnv1a64({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace srcount
