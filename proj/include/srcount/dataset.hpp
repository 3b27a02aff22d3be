#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace srcount {

// Which of the two stored labels a model is trained to predict.
enum class LabelSemantics { total, noncoherent };

LabelSemantics parse_label_semantics(std::string_view name);
std::string_view to_string(LabelSemantics s);

enum class Split { train, val, test };

Split parse_split(std::string_view name);
std::string_view to_string(Split s);

enum class Pipeline { plain, fbss };

Pipeline parse_pipeline(std::string_view name);
std::string_view to_string(Pipeline p);

// Row-major float features, one row per frame, with both ground-truth labels.
struct LabeledDataset {
  std::size_t width = 0;
  std::vector<float> features;
  std::vector<std::uint16_t> labels_total;
  std::vector<std::uint16_t> labels_noncoherent;
  LabelSemantics semantics = LabelSemantics::total;

  std::size_t elements = 0;   // L
  std::size_t cov_side = 0;   // n
  std::size_t snapshots = 0;  // N
  Split split = Split::train;
  std::string provenance;     // digest of the generating config

  std::size_t size() const noexcept { return labels_total.size(); }
  bool empty() const noexcept { return labels_total.empty(); }
  std::span<const float> row(std::size_t i) const { return {features.data() + i * width, width}; }
  std::size_t label(std::size_t i) const {
    return semantics == LabelSemantics::total ? labels_total[i] : labels_noncoherent[i];
  }
  std::vector<std::size_t> labels() const;

  void push_back(std::span<const double> row, std::size_t total, std::size_t noncoherent);
  // Rows whose index satisfies keep(i), same metadata.
  template <class Pred>
  LabeledDataset filter(Pred keep) const {
    LabeledDataset out = with_metadata();
    for (std::size_t i = 0; i < size(); ++i) {
      if (!keep(i)) continue;
      out.features.insert(out.features.end(), features.begin() + i * width, features.begin() + (i + 1) * width);
      out.labels_total.push_back(labels_total[i]);
      out.labels_noncoherent.push_back(labels_noncoherent[i]);
    }
    return out;
  }
  LabeledDataset with_metadata() const;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t v);

}  // namespace srcount
