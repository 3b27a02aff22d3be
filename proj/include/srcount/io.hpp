#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srcount/array_model.hpp"
#include "srcount/dataset.hpp"
#include "srcount/detectors.hpp"

namespace srcount::io {

using Bytes = std::vector<unsigned char>;

inline constexpr std::uint16_t kDatasetVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class PayloadKind : std::uint8_t { raw_frames = 0, features = 1 };

// Fixed little-endian "SDS1" header.
struct DatasetHeader {
  std::uint16_t version = kDatasetVersion;
  PayloadKind kind = PayloadKind::features;
  std::uint16_t elements = 0;   // L
  std::uint16_t cov_side = 0;   // n
  std::uint32_t snapshots = 0;  // N
  std::uint32_t count = 0;
  std::uint8_t label_arity = 2;  // (total, noncoherent)
};

Bytes encode_dataset(const LabeledDataset& data);
// The label semantics are not stored in the file and must be supplied.
LabeledDataset decode_dataset(const Bytes& bytes, LabelSemantics semantics = LabelSemantics::total);

Bytes encode_frames(const std::vector<Frame>& frames);
std::vector<Frame> decode_frames(const Bytes& bytes);

DatasetHeader peek_header(const Bytes& bytes);

// Checkpoint: "SCK1", u32 manifest length, JSON manifest, tensor records in
// manifest order, then a u64 FNV-1a over every byte before it.
Bytes encode_checkpoint(DetectorModel& model, LabelSemantics semantics = LabelSemantics::total);
struct LoadedCheckpoint {
  DetectorModel model;
  LabelSemantics semantics = LabelSemantics::total;
};
LoadedCheckpoint decode_checkpoint(const Bytes& bytes);

// Throws IoError on failure. write_file goes through a temporary file in the
// target directory and a rename.
Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace srcount::io
