#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "senti/edges.hpp"

namespace senti {

/// One tagged corpus image. `path` is absolute once ingested; `edge_path` is
/// relative to the index directory and only set by build_index().
struct CorpusEntry {
  std::string id;
  std::filesystem::path path;
  std::string noun;
  std::string adjective;
  int width = 0;
  int height = 0;
  std::filesystem::path edge_path;

  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

struct TagPair {
  std::string noun;
  std::string adjective;

  friend auto operator<=>(const TagPair&, const TagPair&) = default;
};

struct CorpusIndex {
  static constexpr int kSchemaVersion = 1;

  std::vector<CorpusEntry> entries;
  std::set<TagPair> vocabulary;
  EdgeBackendId edge_backend = EdgeBackendId::sobel;
  std::string created_at;  // ISO-8601 UTC
  int retrieval_size = kRetrievalSize;
  /// Directory the index was built into or loaded from; not serialized.
  std::filesystem::path root;

  std::filesystem::path edge_file(const CorpusEntry& entry) const { return root / entry.edge_path; }

  friend bool operator==(const CorpusIndex&, const CorpusIndex&) = default;
};

/// Lowercase, surrounding whitespace removed.
std::string normalize_tag(std::string_view tag);

/// Entry ids become file names, so they are limited to [A-Za-z0-9._-] and
/// may not start with a dot.
bool is_valid_entry_id(std::string_view id);

/// Reads a JSON-lines manifest of {"id", "path", "noun", "adjective"}.
/// Relative image paths resolve against the manifest's directory. Blank lines
/// are skipped; line numbers in errors are 1-based.
std::vector<CorpusEntry> ingest_manifest(const std::filesystem::path& path);

struct BuildOptions {
  /// 0 picks the hardware concurrency.
  unsigned threads = 0;
  /// Fixed timestamp for reproducible index.json bytes; defaults to now.
  std::optional<std::string> created_at;
};

/// Decodes every entry, writes <out_dir>/edges/<id>.png at the retrieval size
/// and then <out_dir>/index.json. Throws EntryImageError naming the first
/// failing entry in manifest order.
CorpusIndex build_index(std::vector<CorpusEntry> entries, EdgeBackendId backend,
                        const std::filesystem::path& out_dir, const BuildOptions& options = {});

/// Throws CorruptIndex for schema or consistency failures and
/// MissingEdgeMap when an entry's edge PNG is gone.
CorpusIndex load_index(const std::filesystem::path& dir);

EdgeMap load_edge_map(const CorpusIndex& index, const CorpusEntry& entry);

}  // namespace senti
