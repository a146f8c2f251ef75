#include "senti/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "senti/error.hpp"
#include "senti/hash.hpp"

namespace senti {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "weight archives assume little-endian hosts");

namespace {

std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

}  // namespace

const NamedTensor& WeightArchive::require(const std::string& key,
                                          const std::vector<std::int64_t>& shape) const {
  auto it = tensors.find(key);
  if (it == tensors.end()) fail(ErrorCode::MissingTensor, key);
  if (it->second.shape != shape)
    fail(ErrorCode::ShapeMismatch, key + ": expected " + shape_string(shape) + ", found " +
                                       shape_string(it->second.shape));
  return it->second;
}

fs::path hash_sidecar_path(const fs::path& archive) {
  fs::path sidecar = archive;
  sidecar += ".sha256";
  return sidecar;
}

void write_weight_archive(const WeightArchive& archive, const fs::path& path) {
  json header = json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : archive.tensors) {
    if (static_cast<std::int64_t>(tensor.values.size()) != element_count(tensor.shape))
      fail(ErrorCode::FormatError, name + ": value count does not match shape");
    const std::uint64_t bytes = tensor.values.size() * sizeof(float);
    header[name] = {{"dtype", "F32"}, {"shape", tensor.shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  json meta = json::object();
  for (const auto& [k, v] : archive.metadata) meta[k] = v;
  meta["format_version"] = std::to_string(WeightArchive::kFormatVersion);
  header["__metadata__"] = meta;

  std::string text = header.dump();
  while (text.size() % 8 != 0) text.push_back(' ');

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  const std::uint64_t header_size = text.size();
  out.write(reinterpret_cast<const char*>(&header_size), sizeof header_size);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, tensor] : archive.tensors) {
    out.write(reinterpret_cast<const char*>(tensor.values.data()),
              static_cast<std::streamsize>(tensor.values.size() * sizeof(float)));
  }
  out.close();
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());

  std::ofstream sidecar(hash_sidecar_path(path), std::ios::trunc);
  sidecar << sha256_file(path) << "  " << path.filename().string() << "\n";
  if (!sidecar) fail(ErrorCode::IoError, "cannot write " + hash_sidecar_path(path).string());
}

WeightArchive read_weight_archive(const fs::path& path) {
  if (!fs::is_regular_file(path)) fail(ErrorCode::NotFound, path.string());
  const fs::path sidecar = hash_sidecar_path(path);
  if (!fs::is_regular_file(sidecar))
    fail(ErrorCode::FormatError, "missing integrity sidecar " + sidecar.string());
  std::string expected;
  {
    std::ifstream in(sidecar);
    in >> expected;
  }
  if (expected != sha256_file(path))
    fail(ErrorCode::FormatError, path.string() + ": content hash does not match " + sidecar.string());

  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = std::move(buffer).str();
  if (bytes.size() < 8) fail(ErrorCode::FormatError, path.string() + ": truncated header");
  std::uint64_t header_size = 0;
  std::memcpy(&header_size, bytes.data(), sizeof header_size);
  if (header_size > bytes.size() - 8) fail(ErrorCode::FormatError, path.string() + ": bad header length");

  json header;
  try {
    header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_size));
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": header is not JSON (" + e.what() + ")");
  }
  if (!header.is_object()) fail(ErrorCode::FormatError, path.string() + ": header is not an object");

  const std::size_t data_begin = 8 + header_size;
  const std::size_t data_size = bytes.size() - data_begin;
  WeightArchive archive;
  for (const auto& [name, entry] : header.items()) {
    if (name == "__metadata__") {
      for (const auto& [k, v] : entry.items()) {
        if (!v.is_string()) fail(ErrorCode::FormatError, "metadata value for " + k + " is not a string");
        archive.metadata[k] = v.get<std::string>();
      }
      continue;
    }
    try {
      if (entry.at("dtype").get<std::string>() != "F32")
        fail(ErrorCode::FormatError, name + ": only F32 tensors are supported");
      NamedTensor tensor;
      tensor.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto offsets = entry.at("data_offsets").get<std::vector<std::uint64_t>>();
      const std::int64_t count = element_count(tensor.shape);
      if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > data_size ||
          offsets[1] - offsets[0] != static_cast<std::uint64_t>(count) * sizeof(float))
        fail(ErrorCode::FormatError, name + ": inconsistent data offsets");
      tensor.values.resize(static_cast<std::size_t>(count));
      std::memcpy(tensor.values.data(), bytes.data() + data_begin + offsets[0], offsets[1] - offsets[0]);
      archive.tensors.emplace(name, std::move(tensor));
    } catch (const json::exception& e) {
      fail(ErrorCode::FormatError, name + ": malformed tensor entry (" + e.what() + ")");
    }
  }
  auto version = archive.metadata.find("format_version");
  if (version == archive.metadata.end() || version->second != std::to_string(WeightArchive::kFormatVersion))
    fail(ErrorCode::FormatError, path.string() + ": unsupported or missing format_version");
  archive.metadata.erase(version);
  return archive;
}

}  // namespace senti
