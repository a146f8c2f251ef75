#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace senti {

struct NamedTensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Flat name -> float32 tensor map, stored on disk in the safetensors layout
/// (little-endian u64 header length, JSON header, raw data) with a
/// `<file>.sha256` sidecar in sha256sum format.
struct WeightArchive {
  static constexpr int kFormatVersion = 1;

  std::map<std::string, NamedTensor> tensors;
  std::map<std::string, std::string> metadata;

  /// Throws MissingTensor or ShapeMismatch.
  const NamedTensor& require(const std::string& key, const std::vector<std::int64_t>& shape) const;

  friend bool operator==(const WeightArchive&, const WeightArchive&) = default;
};

/// Writes the archive and its hash sidecar. Output bytes depend only on the
/// archive contents.
void write_weight_archive(const WeightArchive& archive, const std::filesystem::path& path);

/// Verifies the sidecar hash, then parses. Throws NotFound, FormatError.
WeightArchive read_weight_archive(const std::filesystem::path& path);

std::filesystem::path hash_sidecar_path(const std::filesystem::path& archive);

}  // namespace senti
