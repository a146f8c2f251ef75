#include "senti/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "senti/error.hpp"

namespace senti {

namespace fs = std::filesystem;
using nlohmann::json;

std::string normalize_tag(std::string_view tag) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!tag.empty() && is_space(tag.front())) tag.remove_prefix(1);
  while (!tag.empty() && is_space(tag.back())) tag.remove_suffix(1);
  std::string out(tag);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_valid_entry_id(std::string_view id) {
  if (id.empty() || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '.' || c == '_' || c == '-';
  });
}

namespace {

std::string required_string(const json& line, const char* field, std::size_t line_no) {
  auto it = line.find(field);
  if (it == line.end() || it->is_null())
    fail(ErrorCode::MissingField, std::string("line ") + std::to_string(line_no) + ": \"" + field + "\"");
  if (!it->is_string())
    fail(ErrorCode::ParseError, std::string("line ") + std::to_string(line_no) + ": \"" + field +
                                    "\" must be a string");
  return it->get<std::string>();
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path edge_relative_path(const std::string& id) { return fs::path("edges") / (id + ".png"); }

std::set<TagPair> vocabulary_of(const std::vector<CorpusEntry>& entries) {
  std::set<TagPair> vocab;
  for (const auto& e : entries) vocab.insert({e.noun, e.adjective});
  return vocab;
}

json index_to_json(const CorpusIndex& index) {
  json entries = json::array();
  for (const auto& e : index.entries) {
    entries.push_back({{"id", e.id},
                       {"path", e.path.string()},
                       {"noun", e.noun},
                       {"adjective", e.adjective},
                       {"width", e.width},
                       {"height", e.height},
                       {"edge_path", e.edge_path.generic_string()}});
  }
  json vocab = json::array();
  for (const auto& pair : index.vocabulary) vocab.push_back({pair.noun, pair.adjective});
  return {{"schema_version", CorpusIndex::kSchemaVersion},
          {"edge_backend", std::string(to_string(index.edge_backend))},
          {"retrieval_size", index.retrieval_size},
          {"created_at", index.created_at},
          {"entries", entries},
          {"vocabulary", vocab}};
}

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

}  // namespace

std::vector<CorpusEntry> ingest_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!fs::is_regular_file(path) || !in) fail(ErrorCode::NotFound, path.string());
  const fs::path base = fs::absolute(path).parent_path();

  std::vector<CorpusEntry> entries;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json line;
    try {
      line = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!line.is_object()) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": not an object");

    CorpusEntry entry;
    entry.id = required_string(line, "id", line_no);
    const std::string image = required_string(line, "path", line_no);
    entry.noun = normalize_tag(required_string(line, "noun", line_no));
    entry.adjective = normalize_tag(required_string(line, "adjective", line_no));
    if (!is_valid_entry_id(entry.id))
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": id \"" + entry.id +
                                      "\" may only use letters, digits, '.', '_' and '-'");
    if (entry.noun.empty()) fail(ErrorCode::MissingField, "line " + std::to_string(line_no) + ": \"noun\" is blank");
    if (entry.adjective.empty())
      fail(ErrorCode::MissingField, "line " + std::to_string(line_no) + ": \"adjective\" is blank");
    if (!seen.insert(entry.id).second) fail(ErrorCode::DuplicateId, entry.id);
    entry.path = fs::path(image).is_absolute() ? fs::path(image) : (base / image).lexically_normal();
    entries.push_back(std::move(entry));
  }
  return entries;
}

CorpusIndex build_index(std::vector<CorpusEntry> entries, EdgeBackendId backend, const fs::path& out_dir,
                        const BuildOptions& options) {
  {
    std::unordered_set<std::string> seen;
    for (const auto& e : entries) {
      if (!is_valid_entry_id(e.id)) fail(ErrorCode::InvalidArgument, "bad entry id \"" + e.id + "\"");
      if (!seen.insert(e.id).second) fail(ErrorCode::DuplicateId, e.id);
    }
  }
  std::error_code ec;
  fs::create_directories(out_dir / "edges", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + (out_dir / "edges").string() + ": " + ec.message());

  std::vector<std::exception_ptr> errors(entries.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < entries.size();) {
      auto& entry = entries[i];
      try {
        ImageTensor img;
        try {
          img = load_image(entry.path);
        } catch (const Error& e) {
          fail(ErrorCode::EntryImageError, entry.id + " (" + std::string(e.what()) + ")");
        }
        entry.width = img.width();
        entry.height = img.height();
        entry.edge_path = edge_relative_path(entry.id);
        save_gray_png(retrieval_signature(img, backend).map, out_dir / entry.edge_path);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = worker_count(options.threads, entries.size());
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  pool.clear();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  CorpusIndex index;
  index.entries = std::move(entries);
  index.vocabulary = vocabulary_of(index.entries);
  index.edge_backend = backend;
  index.created_at = options.created_at.value_or(utc_now());
  index.root = out_dir;

  const fs::path file = out_dir / "index.json";
  std::ofstream out(file, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + file.string());
  out << index_to_json(index).dump(2) << "\n";
  if (!out) fail(ErrorCode::IoError, "failed writing " + file.string());
  return index;
}

CorpusIndex load_index(const fs::path& dir) {
  const fs::path file = dir / "index.json";
  if (!fs::is_regular_file(file)) fail(ErrorCode::CorruptIndex, "no index.json in " + dir.string());
  json doc;
  {
    std::ifstream in(file);
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::CorruptIndex, file.string() + ": " + e.what());
    }
  }

  CorpusIndex index;
  index.root = dir;
  try {
    if (doc.at("schema_version").get<int>() != CorpusIndex::kSchemaVersion)
      fail(ErrorCode::CorruptIndex, "unsupported schema_version " + doc.at("schema_version").dump());
    try {
      index.edge_backend = parse_edge_backend(doc.at("edge_backend").get<std::string>());
    } catch (const Error& e) {
      fail(ErrorCode::CorruptIndex, e.detail());
    }
    index.created_at = doc.at("created_at").get<std::string>();
    index.retrieval_size = doc.at("retrieval_size").get<int>();
    if (index.retrieval_size != kRetrievalSize)
      fail(ErrorCode::CorruptIndex, "retrieval_size " + std::to_string(index.retrieval_size) +
                                        " differs from " + std::to_string(kRetrievalSize));

    std::unordered_set<std::string> seen;
    for (const auto& item : doc.at("entries")) {
      CorpusEntry e;
      e.id = item.at("id").get<std::string>();
      e.path = item.at("path").get<std::string>();
      e.noun = item.at("noun").get<std::string>();
      e.adjective = item.at("adjective").get<std::string>();
      e.width = item.at("width").get<int>();
      e.height = item.at("height").get<int>();
      e.edge_path = fs::path(item.at("edge_path").get<std::string>());
      if (!is_valid_entry_id(e.id)) fail(ErrorCode::CorruptIndex, "bad entry id \"" + e.id + "\"");
      if (!seen.insert(e.id).second) fail(ErrorCode::CorruptIndex, "duplicate entry id " + e.id);
      if (e.noun.empty() || e.noun != normalize_tag(e.noun) || e.adjective.empty() ||
          e.adjective != normalize_tag(e.adjective))
        fail(ErrorCode::CorruptIndex, e.id + ": tags are not normalized");
      if (e.edge_path != edge_relative_path(e.id))
        fail(ErrorCode::CorruptIndex, e.id + ": unexpected edge_path " + e.edge_path.string());
      if (e.width < 1 || e.height < 1) fail(ErrorCode::CorruptIndex, e.id + ": bad image size");
      index.entries.push_back(std::move(e));
    }
    for (const auto& pair : doc.at("vocabulary")) {
      if (!pair.is_array() || pair.size() != 2) fail(ErrorCode::CorruptIndex, "malformed vocabulary item");
      index.vocabulary.insert({pair[0].get<std::string>(), pair[1].get<std::string>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptIndex, file.string() + ": " + e.what());
  }

  if (index.vocabulary != vocabulary_of(index.entries))
    fail(ErrorCode::CorruptIndex, "stored vocabulary does not match the entries");
  for (const auto& e : index.entries)
    if (!fs::is_regular_file(index.edge_file(e))) fail(ErrorCode::MissingEdgeMap, e.id);
  return index;
}

EdgeMap load_edge_map(const CorpusIndex& index, const CorpusEntry& entry) {
  const fs::path file = index.edge_file(entry);
  if (!fs::is_regular_file(file)) fail(ErrorCode::MissingEdgeMap, entry.id);
  EdgeMap edges{load_gray_png(file)};
  if (edges.height() != index.retrieval_size || edges.width() != index.retrieval_size)
    fail(ErrorCode::CorruptIndex, entry.id + ": edge map is " + std::to_string(edges.width()) + "x" +
                                      std::to_string(edges.height()));
  return edges;
}

}  // namespace senti
