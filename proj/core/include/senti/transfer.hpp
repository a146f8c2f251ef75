#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "senti/backbone.hpp"
#include "senti/image.hpp"
#include "senti/tensor.hpp"

namespace senti {

/// L = alpha * L_content + beta * L_sentiment
struct LossWeights {
  double alpha = 1.0;
  double beta = 1'000'000.0;

  /// Both non-negative and not both zero.
  void validate() const;
};

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Channel Gram matrix of a [C, H, W] tensor: F * F^T / (C * H * W) with F the
/// [C, H*W] flattening. Exactly symmetric.
template <typename T>
Matrix<T> gram(const Tensor<T>& f);

template <typename T>
struct GramSet {
  std::array<Matrix<T>, kTapCount> levels;
};

template <typename T>
GramSet<T> gram_set(const FeaturePyramid<T>& pyramid);

/// Mean squared difference at one level (1-based `content_tap`).
template <typename T>
double content_loss(const FeaturePyramid<T>& f, const FeaturePyramid<T>& source, int content_tap);

/// Average over the five levels of the mean squared Gram difference. Levels
/// must agree in channel count; spatial sizes may differ.
template <typename T>
double sentiment_loss(const FeaturePyramid<T>& f, const FeaturePyramid<T>& target);
template <typename T>
double sentiment_loss(const FeaturePyramid<T>& f, const GramSet<T>& target);

struct LossBreakdown {
  double total = 0.0;
  double content = 0.0;
  double sentiment = 0.0;
};

/// total = alpha * content + beta * sentiment, evaluated exactly as written.
LossBreakdown compose_loss(const LossWeights& weights, double content, double sentiment);

template <typename T>
LossBreakdown total_loss(const FeaturePyramid<T>& f, const FeaturePyramid<T>& source,
                         const FeaturePyramid<T>& target, const LossWeights& weights,
                         int content_tap = 4);

/// The optimization objective for one input/reference pair. Source features
/// and target Gram matrices are computed once at construction; evaluation
/// happens on preprocessed [3, H, W] iterates.
template <typename T>
class SentimentObjective {
 public:
  SentimentObjective(const Backbone<T>& backbone, const Tensor<T>& source,
                     const Tensor<T>& reference, LossWeights weights);

  LossBreakdown evaluate(const Tensor<T>& x) const;
  /// Writes dL/dx into `grad` (same shape as x).
  LossBreakdown evaluate_with_gradient(const Tensor<T>& x, Tensor<T>& grad) const;

  const Backbone<T>& backbone() const noexcept { return backbone_; }

 private:
  LossBreakdown losses(const FeaturePyramid<T>& f) const;

  const Backbone<T>& backbone_;
  LossWeights weights_;
  int content_tap_;
  Tensor<T> source_content_;
  GramSet<T> target_grams_;
};

/// d L / d pixel for an image in [0, 1] (chains through the normalization).
template <typename T>
LossBreakdown pixel_gradient(const SentimentObjective<T>& objective, const ImageTensor& img,
                             ImageTensor& grad);

struct TransferConfig {
  int iterations = 500;
  double step_size = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  BackboneId backbone = BackboneId::densenet121;
  int working_long_side = 512;
  LossWeights weights;
  int trace_every = 10;
  /// Recorded for reproducibility; the optimizer itself is deterministic.
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TransferConfig& config);

struct TraceRow {
  int iteration = 0;
  double total = 0.0;
  double content = 0.0;
  double sentiment = 0.0;
};

struct TransferResult {
  ImageTensor output;
  std::vector<TraceRow> trace;
  TransferConfig config;
};

using TraceCallback = std::function<void(const TraceRow&)>;

/// Optimizes the input's pixels with Adam so its content features stay close
/// to the input's while its Gram statistics approach the reference's.
///
/// Both images are resized to the working long side, the iterate starts at
/// the resized input, and the result is clamped to the valid pixel range and
/// resized back to the input's resolution. Throws NonFiniteLoss naming the
/// iteration if the loss diverges.
TransferResult run_transfer(const Backbone<float>& backbone, const ImageTensor& input,
                            const ImageTensor& reference, const TransferConfig& config,
                            const TraceCallback& on_trace = {});

bool is_traced_iteration(int iteration, const TransferConfig& config);

void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path);
nlohmann::json trace_to_json(const std::vector<TraceRow>& trace);

}  // namespace senti
