#include "senti/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>
#include <unordered_set>

#include "senti/corpus.hpp"
#include "senti/error.hpp"

namespace senti {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shared reader for the two pair manifests; `second` names the field that
// differs between them.
template <typename Pair, typename Assign>
std::vector<Pair> read_pairs(const fs::path& manifest, const char* second, Assign assign) {
  std::ifstream in(manifest);
  if (!fs::is_regular_file(manifest) || !in) fail(ErrorCode::NotFound, manifest.string());
  const fs::path base = fs::absolute(manifest).parent_path();
  auto resolve = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? fs::path(p) : (base / p).lexically_normal();
  };

  std::vector<Pair> pairs;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    const std::string where = "line " + std::to_string(line_no);
    json line;
    try {
      line = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::ParseError, where + ": " + e.what());
    }
    if (!line.is_object()) fail(ErrorCode::ParseError, where + ": not an object");
    auto field = [&](const char* name) {
      auto it = line.find(name);
      if (it == line.end() || it->is_null()) fail(ErrorCode::MissingField, where + ": \"" + name + "\"");
      if (!it->is_string()) fail(ErrorCode::ParseError, where + ": \"" + name + "\" must be a string");
      return it->get<std::string>();
    };
    Pair pair;
    pair.pair_id = field("pair_id");
    pair.input = resolve(field("input"));
    assign(pair, resolve(field(second)));
    if (!seen.insert(pair.pair_id).second) fail(ErrorCode::DuplicateId, pair.pair_id);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

json params_json(const SsimParams& p) {
  return {{"window", p.window}, {"sigma", p.sigma}, {"k1", p.k1}, {"k2", p.k2}, {"dynamic_range", p.dynamic_range}};
}

}  // namespace

std::vector<EvaluationPair> read_evaluation_pairs(const fs::path& manifest) {
  return read_pairs<EvaluationPair>(manifest, "output",
                                    [](EvaluationPair& p, fs::path v) { p.output = std::move(v); });
}

std::vector<TransferPair> read_transfer_pairs(const fs::path& manifest) {
  return read_pairs<TransferPair>(manifest, "reference",
                                  [](TransferPair& p, fs::path v) { p.reference = std::move(v); });
}

const std::vector<Baseline>& reference_baselines() {
  static const std::vector<Baseline> baselines{
      {"gatys", 0.7019}, {"wct", 0.2443}, {"adain", 0.5301}, {"stylenas", 0.6653}, {"ours", 0.8719},
  };
  return baselines;
}

double detail_preservation(const ImageTensor& input, const ImageTensor& output, const SsimParams& params) {
  if (input.height() != output.height() || input.width() != output.width())
    fail(ErrorCode::PairShapeMismatch, std::to_string(input.width()) + "x" + std::to_string(input.height()) +
                                           " vs " + std::to_string(output.width()) + "x" +
                                           std::to_string(output.height()));
  return ssim(rgb_to_luma(input), rgb_to_luma(output), params);
}

EvaluationReport summarize(std::vector<PairScore> scores, const SsimParams& params, json config) {
  if (scores.empty()) fail(ErrorCode::InvalidArgument, "no pairs to evaluate");
  EvaluationReport report;
  double sum = 0.0;
  for (const auto& s : scores) sum += s.ssim;
  report.mean_ssim = sum / static_cast<double>(scores.size());
  report.per_pair = std::move(scores);
  report.params = params;
  report.config = std::move(config);
  return report;
}

EvaluationReport evaluate_detail_preservation(const std::vector<EvaluationPair>& pairs, const SsimParams& params,
                                              unsigned threads) {
  params.validate();
  std::vector<PairScore> scores(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < pairs.size();) {
      try {
        const auto& p = pairs[i];
        ImageTensor a = load_image(p.input);
        ImageTensor b = load_image(p.output);
        if (a.height() != b.height() || a.width() != b.width())
          fail(ErrorCode::PairShapeMismatch, p.pair_id);
        scores[i] = {p.pair_id, detail_preservation(a, b, params)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(pairs.size(), 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return summarize(std::move(scores), params);
}

json to_json(const EvaluationReport& report) {
  json per_pair = json::array();
  for (const auto& s : report.per_pair) per_pair.push_back({{"pair_id", s.pair_id}, {"ssim", s.ssim}});
  json baselines = json::object();
  for (const auto& b : reference_baselines()) baselines[b.method] = b.mean_ssim;
  return {{"per_pair", per_pair},
          {"mean_ssim", report.mean_ssim},
          {"pair_count", report.per_pair.size()},
          {"ssim_params", params_json(report.params)},
          {"metric", "ssim on Rec.709 luma at native resolution"},
          {"config", report.config},
          {"reference_baselines", baselines}};
}

void write_report_json(const EvaluationReport& report, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << to_json(report).dump(2) << "\n";
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

void write_report_csv(const EvaluationReport& report, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "pair_id,ssim\n";
  char num[40];
  for (const auto& s : report.per_pair) {
    std::snprintf(num, sizeof num, "%.17g", s.ssim);
    out << s.pair_id << ',' << num << "\n";
  }
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

ImageTensor quantize_8bit(const ImageTensor& img) {
  ImageTensor out = img;
  for (float& v : out.data()) v = static_cast<float>(to_byte(v)) / 255.0f;
  return out;
}

EvaluationReport evaluate_transfers(const Backbone<float>& backbone, const std::vector<TransferPair>& pairs,
                                    const TransferConfig& config, const fs::path& out_dir,
                                    const PairCallback& on_pair) {
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  }
  std::vector<PairScore> scores;
  for (const auto& pair : pairs) {
    if (!is_valid_entry_id(pair.pair_id))
      fail(ErrorCode::InvalidArgument, "pair id \"" + pair.pair_id + "\" is not usable as a file name");
    const ImageTensor input = load_image(pair.input);
    const ImageTensor reference = load_image(pair.reference);
    const TransferResult result = run_transfer(backbone, input, reference, config);
    const ImageTensor output = quantize_8bit(result.output);
    if (!out_dir.empty()) save_image(output, out_dir / (pair.pair_id + ".png"));
    scores.push_back({pair.pair_id, detail_preservation(input, output)});
    if (on_pair) on_pair(pair, scores.back());
  }
  return summarize(std::move(scores), {}, to_json(config));
}

}  // namespace senti
