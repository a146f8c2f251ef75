#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <utility>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "senti/backbone.hpp"
#include "senti/corpus.hpp"
#include "senti/error.hpp"
#include "senti/evaluation.hpp"
#include "senti/hash.hpp"
#include "senti/retrieval.hpp"
#include "senti/transfer.hpp"

namespace senti::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct BackboneFlags {
  std::string backbone = "densenet121";
  std::string weights;
};

struct RetrieveFlags {
  std::string index;
  std::string input;
  std::string noun;
  std::string sentiment;
  int top_k = 1;
  std::string strategy = "ssim-edge";
  unsigned threads = 0;
  std::string out;
};

struct TransferFlags {
  std::string input;
  std::string reference;
  std::string out;
  double alpha = 1.0;
  double beta = 1e6;
  int iters = 500;
  double lr = 1e-2;
  int size = 512;
  std::uint64_t seed = 0;
  std::string trace;
};

struct IndexFlags {
  std::string manifest;
  std::string out;
  std::string edge_backend = "sobel";
  unsigned threads = 0;
  std::string created_at;
};

struct EvaluateFlags {
  std::string pairs;
  std::string out;
  std::string csv;
  unsigned threads = 0;
};

void add_backbone_options(CLI::App* app, BackboneFlags& f) {
  app->add_option("--backbone", f.backbone, "Feature network")
      ->check(CLI::IsMember({"densenet121", "vgg19"}))
      ->capture_default_str();
  app->add_option("--weights", f.weights,
                  std::string("Weight archive (default: $") + kWeightsDirEnv + "/<backbone>.safetensors)");
}

void add_retrieve_options(CLI::App* app, RetrieveFlags& f, bool with_out) {
  app->add_option("--index", f.index, "Index directory")->required();
  app->add_option("--input", f.input, "Query image")->required();
  app->add_option("--noun", f.noun, "Content tag of the input")->required();
  app->add_option("--sentiment", f.sentiment, "Target adjective")->required();
  app->add_option("--top-k", f.top_k, "Number of ranked entries")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--strategy", f.strategy, "Ranking")
      ->check(CLI::IsMember({"ssim-edge", "perceptual"}))
      ->capture_default_str();
  app->add_option("--threads", f.threads, "Scoring threads (0 = all cores)")->capture_default_str();
  if (with_out) app->add_option("--out", f.out, "Write the ranked JSON here instead of stdout");
}

void add_transfer_options(CLI::App* app, TransferFlags& f, bool standalone) {
  if (standalone) {
    app->add_option("--input", f.input, "Content image")->required();
    app->add_option("--reference", f.reference, "Sentiment reference image")->required();
  }
  app->add_option("--out", f.out, "Output PNG")->required();
  app->add_option("--alpha", f.alpha, "Content weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  app->add_option("--beta", f.beta, "Sentiment weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  app->add_option("--iters", f.iters, "Adam iterations")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--lr", f.lr, "Adam step size")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--size", f.size, "Working long side in pixels")->check(CLI::Range(32, 8192))->capture_default_str();
  app->add_option("--seed", f.seed, "Recorded seed")->capture_default_str();
  app->add_option("--trace", f.trace, "Loss trace (.json for JSON, CSV otherwise)");
}

// Stripped from the argument list and expanded by apply_config() before
// parsing; registered only so it shows up in --help.
void add_config_option(CLI::App* app) {
  app->add_option("--config", "key = value file whose keys mirror the flags; flags take precedence");
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool flag_given(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args)
    if (a == flag || a.starts_with(flag + "=")) return true;
  return false;
}

// Splices "--key value" for every config entry whose flag is absent from the
// command line. Throws CLI::ParseError subclasses so bad files are usage
// errors like any other.
std::vector<std::string> apply_config(std::vector<std::string> args, const CLI::App& app) {
  if (args.size() < 2) return args;
  const CLI::App* sub = nullptr;
  for (const auto* candidate : app.get_subcommands({}))
    if (candidate->get_name() == args[1]) sub = candidate;
  if (!sub) return args;

  std::string file;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config", 1, 0);
      file = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].starts_with("--config=")) {
      file = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (file.empty()) return args;

  std::ifstream in(file);
  if (!in) throw CLI::FileError::Missing(file);
  std::vector<std::string> injected;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--config", file + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.starts_with("--")) key.erase(0, 2);
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    const std::string flag = "--" + key;
    if (key == "config" || key == "help" || sub->get_option_no_throw(flag) == nullptr)
      throw CLI::ValidationError("--config", "unknown key \"" + key + "\" in " + file);
    if (flag_given(args, flag)) continue;
    injected.push_back(flag);
    injected.push_back(value);
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

json backbone_json(const BackboneFlags& f) { return {{"backbone", f.backbone}, {"weights", f.weights}}; }

json retrieve_json(const RetrieveFlags& f) {
  return {{"index", f.index},         {"input", f.input},   {"noun", f.noun},
          {"sentiment", f.sentiment}, {"top_k", f.top_k},   {"strategy", f.strategy},
          {"threads", f.threads}};
}

TransferConfig transfer_config(const TransferFlags& f, const BackboneFlags& b) {
  TransferConfig c;
  c.iterations = f.iters;
  c.step_size = f.lr;
  c.backbone = parse_backbone(b.backbone);
  c.working_long_side = f.size;
  c.weights = {f.alpha, f.beta};
  c.seed = f.seed;
  c.validate();
  return c;
}

fs::path resolve_weights(const BackboneFlags& f) {
  if (!f.weights.empty()) return f.weights;
  const char* dir = std::getenv(kWeightsDirEnv);
  if (dir && *dir) return fs::path(dir) / (f.backbone + ".safetensors");
  fail(ErrorCode::NotFound, std::string("no weight archive: pass --weights or set ") + kWeightsDirEnv);
}

Backbone<float> open_backbone(const BackboneFlags& f, const fs::path& weights) {
  return load_backbone<float>(BackboneSpec::defaults(parse_backbone(f.backbone)), weights);
}

fs::path meta_path(const fs::path& out) {
  fs::path p = out;
  p += ".meta.json";
  return p;
}

class Meta {
 public:
  Meta(std::string command, json config) : doc_{{"command", std::move(command)}, {"config", std::move(config)}} {
    doc_["tool_version"] = kToolVersion;
    doc_["inputs"] = json::array();
  }

  void input(const std::string& role, const fs::path& path) {
    doc_["inputs"].push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_file(path)}});
  }
  json& doc() { return doc_; }

  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << doc_.dump(2) << "\n";
    if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
  }

 private:
  json doc_;
};

void write_json_file(const json& doc, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

// --- commands --------------------------------------------------------------

int cmd_index(const IndexFlags& f, std::ostream& out, std::ostream& err) {
  const json config{{"manifest", f.manifest},
                    {"out", f.out},
                    {"edge_backend", f.edge_backend},
                    {"threads", f.threads},
                    {"created_at", f.created_at}};
  err << "config " << config.dump() << "\n";

  auto entries = ingest_manifest(f.manifest);
  BuildOptions options;
  options.threads = f.threads;
  if (!f.created_at.empty()) options.created_at = f.created_at;
  const CorpusIndex index = build_index(entries, parse_edge_backend(f.edge_backend), f.out, options);

  Meta meta("index", config);
  meta.input("manifest", f.manifest);
  for (const auto& e : index.entries) meta.input("entry:" + e.id, e.path);
  meta.write(fs::path(f.out) / "index.meta.json");
  out << json{{"index", (fs::path(f.out) / "index.json").string()},
              {"entries", index.entries.size()},
              {"vocabulary", index.vocabulary.size()}}
             .dump()
      << "\n";
  return kExitOk;
}

struct Retrieved {
  CorpusIndex index;
  RetrievalResult result;
  std::optional<fs::path> weights;
};

Retrieved retrieve(const RetrieveFlags& f, const BackboneFlags& b) {
  Retrieved r;
  r.index = load_index(f.index);
  SentimentQuery query;
  query.input = load_image(f.input);
  query.noun = f.noun;
  query.adjective = f.sentiment;
  query.strategy = parse_retrieval_strategy(f.strategy);
  query.top_k = f.top_k;
  RetrievalOptions options;
  options.threads = f.threads;
  std::optional<Backbone<float>> backbone;
  if (query.strategy == RetrievalStrategy::perceptual) {
    r.weights = resolve_weights(b);
    backbone.emplace(open_backbone(b, *r.weights));
    options.backbone = &*backbone;
  }
  r.result = retrieve_reference(r.index, query, options);
  return r;
}

int cmd_retrieve(const RetrieveFlags& f, const BackboneFlags& b, std::ostream& out, std::ostream& err) {
  json config = retrieve_json(f);
  config.update(backbone_json(b));
  config["out"] = f.out;
  err << "config " << config.dump() << "\n";

  const Retrieved r = retrieve(f, b);
  Meta meta("retrieve", config);
  meta.input("input", f.input);
  meta.input("index", fs::path(f.index) / "index.json");
  if (r.weights) meta.input("weights", *r.weights);

  json doc = to_json(r.result);
  if (f.out.empty()) {
    doc["meta"] = meta.doc();
    out << doc.dump(2) << "\n";
  } else {
    write_json_file(doc, f.out);
    meta.write(meta_path(f.out));
  }
  return kExitOk;
}

void run_and_save(const TransferFlags& f, const BackboneFlags& b, const fs::path& weights, std::ostream& err) {
  const TransferConfig config = transfer_config(f, b);
  const Backbone<float> backbone = open_backbone(b, weights);
  const ImageTensor input = load_image(f.input);
  const ImageTensor reference = load_image(f.reference);
  const TransferResult result = run_transfer(backbone, input, reference, config, [&](const TraceRow& row) {
    err << "iter " << row.iteration << " L=" << row.total << " content=" << row.content
        << " sentiment=" << row.sentiment << "\n";
  });
  save_image(result.output, f.out);
  if (!f.trace.empty()) {
    if (fs::path(f.trace).extension() == ".json")
      write_json_file(trace_to_json(result.trace), f.trace);
    else
      write_trace_csv(result.trace, f.trace);
  }
}

json transfer_json(const TransferFlags& f, const BackboneFlags& b) {
  json config = to_json(transfer_config(f, b));
  config["input"] = f.input;
  config["reference"] = f.reference;
  config["out"] = f.out;
  config["trace"] = f.trace;
  config["weights"] = b.weights;
  return config;
}

int cmd_transfer(const TransferFlags& f, const BackboneFlags& b, std::ostream& out, std::ostream& err) {
  const json config = transfer_json(f, b);
  err << "config " << config.dump() << "\n";
  const fs::path weights = resolve_weights(b);
  run_and_save(f, b, weights, err);

  Meta meta("transfer", config);
  meta.input("input", f.input);
  meta.input("reference", f.reference);
  meta.input("weights", weights);
  meta.write(meta_path(f.out));
  out << json{{"output", f.out}}.dump() << "\n";
  return kExitOk;
}

int cmd_pipeline(const RetrieveFlags& rf, TransferFlags tf, const BackboneFlags& b, std::ostream& out,
                 std::ostream& err) {
  json config = retrieve_json(rf);
  config.update(transfer_json(tf, b));
  config.erase("reference");
  err << "config " << config.dump() << "\n";

  const Retrieved r = retrieve(rf, b);
  const std::string& top = r.result.ranked.front().id;
  for (const auto& e : r.index.entries)
    if (e.id == top) tf.reference = e.path.string();
  json ranked = to_json(r.result);
  out << ranked.dump(2) << "\n";
  err << "reference " << top << " (" << tf.reference << ")\n";

  tf.input = rf.input;
  const fs::path weights = resolve_weights(b);
  run_and_save(tf, b, weights, err);

  Meta meta("pipeline", config);
  meta.doc()["retrieval"] = ranked;
  meta.input("input", rf.input);
  meta.input("index", fs::path(rf.index) / "index.json");
  meta.input("reference", tf.reference);
  meta.input("weights", weights);
  meta.write(meta_path(tf.out));
  return kExitOk;
}

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out, std::ostream& err) {
  const json config{{"pairs", f.pairs}, {"out", f.out}, {"csv", f.csv}, {"threads", f.threads}};
  err << "config " << config.dump() << "\n";

  const auto pairs = read_evaluation_pairs(f.pairs);
  EvaluationReport report = evaluate_detail_preservation(pairs, {}, f.threads);
  report.config = config;
  write_report_json(report, f.out);
  if (!f.csv.empty()) write_report_csv(report, f.csv);

  Meta meta("evaluate", config);
  meta.input("pairs", f.pairs);
  for (const auto& p : pairs) {
    meta.input("input:" + p.pair_id, p.input);
    meta.input("output:" + p.pair_id, p.output);
  }
  meta.write(meta_path(f.out));
  out << json{{"mean_ssim", report.mean_ssim}, {"pairs", report.per_pair.size()}}.dump() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reference retrieval and global sentiment transfer for photographs", "senti"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  IndexFlags index_flags;
  auto* index_cmd = app.add_subcommand("index", "Build a retrieval index from a tagged manifest");
  index_cmd->add_option("--manifest", index_flags.manifest, "JSON-lines manifest")->required();
  index_cmd->add_option("--out", index_flags.out, "Index directory")->required();
  index_cmd->add_option("--edge-backend", index_flags.edge_backend, "Edge detector")
      ->check(CLI::IsMember({"sobel", "learned"}))
      ->capture_default_str();
  index_cmd->add_option("--threads", index_flags.threads, "Worker threads (0 = all cores)")->capture_default_str();
  index_cmd->add_option("--created-at", index_flags.created_at, "Fixed timestamp for reproducible index.json");
  add_config_option(index_cmd);

  RetrieveFlags retrieve_flags;
  BackboneFlags backbone_flags;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank tag-matching corpus images against an input");
  add_retrieve_options(retrieve_cmd, retrieve_flags, true);
  add_backbone_options(retrieve_cmd, backbone_flags);
  add_config_option(retrieve_cmd);

  TransferFlags transfer_flags;
  auto* transfer_cmd = app.add_subcommand("transfer", "Transfer a reference's sentiment onto an input");
  add_transfer_options(transfer_cmd, transfer_flags, true);
  add_backbone_options(transfer_cmd, backbone_flags);
  add_config_option(transfer_cmd);

  RetrieveFlags pipe_retrieve;
  TransferFlags pipe_transfer;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Retrieve the top reference, then transfer from it");
  add_retrieve_options(pipeline_cmd, pipe_retrieve, false);
  add_transfer_options(pipeline_cmd, pipe_transfer, false);
  add_backbone_options(pipeline_cmd, backbone_flags);
  add_config_option(pipeline_cmd);

  EvaluateFlags evaluate_flags;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Mean luma SSIM between inputs and outputs");
  evaluate_cmd->add_option("--pairs", evaluate_flags.pairs, "JSON-lines pairs manifest")->required();
  evaluate_cmd->add_option("--out", evaluate_flags.out, "Report JSON")->required();
  evaluate_cmd->add_option("--csv", evaluate_flags.csv, "Optional per-pair CSV");
  evaluate_cmd->add_option("--threads", evaluate_flags.threads, "Worker threads (0 = all cores)")->capture_default_str();
  add_config_option(evaluate_cmd);

  try {
    const std::vector<std::string> expanded = apply_config(args, app);
    std::vector<const char*> argv;
    for (const auto& a : expanded) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("senti");
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (index_cmd->parsed()) return cmd_index(index_flags, out, err);
    if (retrieve_cmd->parsed()) return cmd_retrieve(retrieve_flags, backbone_flags, out, err);
    if (transfer_cmd->parsed()) return cmd_transfer(transfer_flags, backbone_flags, out, err);
    if (pipeline_cmd->parsed()) return cmd_pipeline(pipe_retrieve, pipe_transfer, backbone_flags, out, err);
    if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate_flags, out, err);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace senti::cli
