#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "senti/backbone.hpp"
#include "senti/image.hpp"
#include "senti/ssim.hpp"
#include "senti/transfer.hpp"

namespace senti {

struct EvaluationPair {
  std::string pair_id;
  std::filesystem::path input;
  std::filesystem::path output;
};

/// JSON lines of {"pair_id", "input", "output"}; relative paths resolve
/// against the manifest's directory.
std::vector<EvaluationPair> read_evaluation_pairs(const std::filesystem::path& manifest);

struct PairScore {
  std::string pair_id;
  double ssim = 0.0;
};

/// Published mean-SSIM figures for other methods, carried as report metadata.
struct Baseline {
  std::string method;
  double mean_ssim;
};
const std::vector<Baseline>& reference_baselines();

struct EvaluationReport {
  std::vector<PairScore> per_pair;
  double mean_ssim = 0.0;
  SsimParams params;
  /// Whatever configuration produced the outputs (may be null).
  nlohmann::json config;
};

/// SSIM between the luma of `input` and `output` at native resolution.
/// Throws PairShapeMismatch if the resolutions differ.
double detail_preservation(const ImageTensor& input, const ImageTensor& output, const SsimParams& params = {});

/// Mean of the scores in pair order. Throws InvalidArgument when empty.
EvaluationReport summarize(std::vector<PairScore> scores, const SsimParams& params = {},
                           nlohmann::json config = nullptr);

EvaluationReport evaluate_detail_preservation(const std::vector<EvaluationPair>& pairs,
                                              const SsimParams& params = {}, unsigned threads = 0);

nlohmann::json to_json(const EvaluationReport& report);
void write_report_json(const EvaluationReport& report, const std::filesystem::path& path);
void write_report_csv(const EvaluationReport& report, const std::filesystem::path& path);

struct TransferPair {
  std::string pair_id;
  std::filesystem::path input;
  std::filesystem::path reference;
};

/// JSON lines of {"pair_id", "input", "reference"}.
std::vector<TransferPair> read_transfer_pairs(const std::filesystem::path& manifest);

/// Snaps every channel to the 8-bit grid, as saving to PNG would.
ImageTensor quantize_8bit(const ImageTensor& img);

using PairCallback = std::function<void(const TransferPair&, const PairScore&)>;

/// Runs the transfer for every pair and scores the 8-bit output against its
/// input. When `out_dir` is non-empty each output is written there as
/// <pair_id>.png.
EvaluationReport evaluate_transfers(const Backbone<float>& backbone, const std::vector<TransferPair>& pairs,
                                    const TransferConfig& config, const std::filesystem::path& out_dir = {},
                                    const PairCallback& on_pair = {});

}  // namespace senti
