#include "senti/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "senti/error.hpp"

namespace senti {

namespace fs = std::filesystem;

void LossWeights::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    fail(ErrorCode::InvalidArgument, "loss weights must be finite and non-negative");
  if (alpha == 0.0 && beta == 0.0) fail(ErrorCode::InvalidArgument, "alpha and beta cannot both be zero");
}

namespace {

template <typename T>
using ConstFeatureMap = Eigen::Map<const Matrix<T>>;
template <typename T>
using FeatureMap = Eigen::Map<Matrix<T>>;

template <typename T>
ConstFeatureMap<T> flatten(const Tensor<T>& f) {
  return ConstFeatureMap<T>(f.data(), f.channels(), static_cast<Eigen::Index>(f.plane()));
}

template <typename T>
double mean_squared_difference(const T* a, const T* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(n);
}

int level_index(int content_tap) {
  if (content_tap < 1 || content_tap > kTapCount)
    fail(ErrorCode::InvalidArgument, "content tap must be in 1..5");
  return content_tap - 1;
}

template <typename T>
void check_gram_compatible(const Matrix<T>& a, const Matrix<T>& b, int level) {
  if (a.rows() != b.rows())
    fail(ErrorCode::ShapeMismatch, "level " + std::to_string(level + 1) + " channel counts differ: " +
                                       std::to_string(a.rows()) + " vs " + std::to_string(b.rows()));
}

}  // namespace

template <typename T>
Matrix<T> gram(const Tensor<T>& f) {
  const auto flat = flatten(f);
  const Eigen::Index c = f.channels();
  Matrix<T> g = Matrix<T>::Zero(c, c);
  if (f.empty()) return g;
  const T norm = T(1) / static_cast<T>(static_cast<double>(c) * static_cast<double>(f.plane()));
  g.template selfadjointView<Eigen::Lower>().rankUpdate(flat, norm);
  g.template triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

template <typename T>
GramSet<T> gram_set(const FeaturePyramid<T>& pyramid) {
  GramSet<T> set;
  for (int i = 0; i < kTapCount; ++i) set.levels[i] = gram(pyramid.levels[i]);
  return set;
}

template <typename T>
double content_loss(const FeaturePyramid<T>& f, const FeaturePyramid<T>& source, int content_tap) {
  const int k = level_index(content_tap);
  const auto& a = f.levels[k];
  const auto& b = source.levels[k];
  if (!a.same_shape(b) || a.empty())
    fail(ErrorCode::ShapeMismatch, "content level shapes differ");
  return mean_squared_difference(a.data(), b.data(), a.size());
}

template <typename T>
double sentiment_loss(const FeaturePyramid<T>& f, const GramSet<T>& target) {
  double sum = 0.0;
  for (int i = 0; i < kTapCount; ++i) {
    const Matrix<T> g = gram(f.levels[i]);
    check_gram_compatible(g, target.levels[i], i);
    sum += mean_squared_difference(g.data(), target.levels[i].data(), static_cast<std::size_t>(g.size()));
  }
  return sum / kTapCount;
}

template <typename T>
double sentiment_loss(const FeaturePyramid<T>& f, const FeaturePyramid<T>& target) {
  return sentiment_loss(f, gram_set(target));
}

LossBreakdown compose_loss(const LossWeights& weights, double content, double sentiment) {
  return {weights.alpha * content + weights.beta * sentiment, content, sentiment};
}

template <typename T>
LossBreakdown total_loss(const FeaturePyramid<T>& f, const FeaturePyramid<T>& source,
                         const FeaturePyramid<T>& target, const LossWeights& weights,
                         int content_tap) {
  weights.validate();
  return compose_loss(weights, content_loss(f, source, content_tap), sentiment_loss(f, target));
}

template <typename T>
SentimentObjective<T>::SentimentObjective(const Backbone<T>& backbone, const Tensor<T>& source,
                                          const Tensor<T>& reference, LossWeights weights)
    : backbone_(backbone), weights_(weights), content_tap_(backbone.spec().content_tap) {
  weights_.validate();
  auto source_features = backbone_.extract(source);
  source_content_ = std::move(source_features.levels[level_index(content_tap_)]);
  target_grams_ = gram_set(backbone_.extract(reference));
}

template <typename T>
LossBreakdown SentimentObjective<T>::losses(const FeaturePyramid<T>& f) const {
  const auto& level = f.levels[level_index(content_tap_)];
  if (!level.same_shape(source_content_))
    fail(ErrorCode::ShapeMismatch, "iterate and source differ in size");
  const double content = mean_squared_difference(level.data(), source_content_.data(), level.size());
  return compose_loss(weights_, content, sentiment_loss(f, target_grams_));
}

template <typename T>
LossBreakdown SentimentObjective<T>::evaluate(const Tensor<T>& x) const {
  return losses(backbone_.extract(x));
}

template <typename T>
LossBreakdown SentimentObjective<T>::evaluate_with_gradient(const Tensor<T>& x, Tensor<T>& grad) const {
  nn::Tape tape;
  const auto f = backbone_.extract(x, &tape);
  const LossBreakdown loss = losses(f);

  std::array<Tensor<T>, kTapCount> grads;
  for (int i = 0; i < kTapCount; ++i) {
    const auto& level = f.levels[i];
    grads[i] = Tensor<T>(level.channels(), level.height(), level.width());
    if (weights_.beta == 0.0) continue;
    // d/dF of mean((G - Gt)^2) with G = F F^T / (C*HW):  4 (G - Gt) F / (C^2 * C * HW)
    const double c = level.channels();
    const double hw = static_cast<double>(level.plane());
    const Matrix<T> diff = gram(level) - target_grams_.levels[i];
    const T coeff = static_cast<T>(weights_.beta / kTapCount * 4.0 / (c * c * c * hw));
    FeatureMap<T> out(grads[i].data(), level.channels(), static_cast<Eigen::Index>(level.plane()));
    out.noalias() = coeff * (diff * flatten(level));
  }
  if (weights_.alpha != 0.0) {
    const int k = level_index(content_tap_);
    const auto& level = f.levels[k];
    const T coeff = static_cast<T>(weights_.alpha * 2.0 / static_cast<double>(level.size()));
    T* g = grads[k].data();
    for (std::size_t i = 0; i < level.size(); ++i)
      g[i] += coeff * (level.data()[i] - source_content_.data()[i]);
  }
  grad = backbone_.backward(tape, grads);
  return loss;
}

template <typename T>
LossBreakdown pixel_gradient(const SentimentObjective<T>& objective, const ImageTensor& img,
                             ImageTensor& grad) {
  const auto& norm = objective.backbone().spec().normalization;
  Tensor<T> g;
  const auto loss = objective.evaluate_with_gradient(preprocess<T>(img, norm), g);
  grad = ImageTensor(img.height(), img.width());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        grad.at(y, x, c) = static_cast<float>(g.at(c, y, x) / norm.stddev[c]);
  return loss;
}

void TransferConfig::validate() const {
  if (iterations < 1) fail(ErrorCode::InvalidArgument, "iterations must be >= 1");
  if (!(step_size > 0.0)) fail(ErrorCode::InvalidArgument, "step size must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    fail(ErrorCode::InvalidArgument, "Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail(ErrorCode::InvalidArgument, "Adam epsilon must be positive");
  if (working_long_side < 32) fail(ErrorCode::InvalidArgument, "working size must be >= 32");
  if (trace_every < 1) fail(ErrorCode::InvalidArgument, "trace interval must be >= 1");
  weights.validate();
}

nlohmann::json to_json(const TransferConfig& config) {
  return {
      {"iterations", config.iterations},
      {"step_size", config.step_size},
      {"adam_betas", {config.adam_beta1, config.adam_beta2}},
      {"adam_eps", config.adam_eps},
      {"backbone", std::string(to_string(config.backbone))},
      {"working_long_side", config.working_long_side},
      {"alpha", config.weights.alpha},
      {"beta", config.weights.beta},
      {"trace_every", config.trace_every},
      {"seed", config.seed},
  };
}

bool is_traced_iteration(int iteration, const TransferConfig& config) {
  return iteration == 1 || iteration == config.iterations || iteration % config.trace_every == 0;
}

TransferResult run_transfer(const Backbone<float>& backbone, const ImageTensor& input,
                            const ImageTensor& reference, const TransferConfig& config,
                            const TraceCallback& on_trace) {
  config.validate();
  if (backbone.spec().id != config.backbone)
    fail(ErrorCode::InvalidArgument, "config asks for " + std::string(to_string(config.backbone)) +
                                         " but the loaded backbone is " +
                                         std::string(to_string(backbone.spec().id)));
  if (!input.is_valid()) fail(ErrorCode::InvalidArgument, "input image is not a valid image tensor");
  if (!reference.is_valid()) fail(ErrorCode::InvalidArgument, "reference image is not a valid image tensor");

  const auto& norm = backbone.spec().normalization;
  Tensor<float> x = preprocess<float>(resize_long_side(input, config.working_long_side), norm);
  const Tensor<float> ref = preprocess<float>(resize_long_side(reference, config.working_long_side), norm);
  const SentimentObjective<float> objective(backbone, x, ref, config.weights);

  TransferResult result;
  result.config = config;
  std::vector<double> m(x.size(), 0.0);
  std::vector<double> v(x.size(), 0.0);
  Tensor<float> grad;
  double beta1_power = 1.0;
  double beta2_power = 1.0;
  for (int it = 1; it <= config.iterations; ++it) {
    const LossBreakdown loss = objective.evaluate_with_gradient(x, grad);
    if (!std::isfinite(loss.total))
      fail(ErrorCode::NonFiniteLoss, "loss became non-finite at iteration " + std::to_string(it));
    if (is_traced_iteration(it, config)) {
      result.trace.push_back({it, loss.total, loss.content, loss.sentiment});
      if (on_trace) on_trace(result.trace.back());
    }
    beta1_power *= config.adam_beta1;
    beta2_power *= config.adam_beta2;
    const double bias1 = 1.0 - beta1_power;
    const double bias2 = 1.0 - beta2_power;
    float* px = x.data();
    const float* pg = grad.data();
    // ReLU maps NaN to zero, so a blown-up iterate would not show in the loss.
    if (!std::all_of(pg, pg + grad.size(), [](float g) { return std::isfinite(g); }))
      fail(ErrorCode::NonFiniteLoss, "gradient became non-finite at iteration " + std::to_string(it));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double g = pg[i];
      m[i] = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * g;
      v[i] = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * g * g;
      const double step = config.step_size * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + config.adam_eps);
      px[i] = static_cast<float>(px[i] - step);
    }
  }

  for (int c = 0; c < 3; ++c) {
    const auto lo = static_cast<float>((0.0 - norm.mean[c]) / norm.stddev[c]);
    const auto hi = static_cast<float>((1.0 - norm.mean[c]) / norm.stddev[c]);
    for (float& value : x.channel(c)) value = std::clamp(value, lo, hi);
  }
  ImageTensor work = deprocess(x, norm);
  for (float& value : work.data()) value = std::clamp(value, 0.0f, 1.0f);
  result.output = resize_to(work, input.height(), input.width());
  return result;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << "iteration,L,L_content,L_sentiment\n";
  char line[160];
  for (const auto& row : trace) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", row.iteration, row.total, row.content,
                  row.sentiment);
    out << line;
  }
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

nlohmann::json trace_to_json(const std::vector<TraceRow>& trace) {
  auto rows = nlohmann::json::array();
  for (const auto& row : trace) {
    rows.push_back({{"iteration", row.iteration},
                    {"L", row.total},
                    {"L_content", row.content},
                    {"L_sentiment", row.sentiment}});
  }
  return rows;
}

template Matrix<float> gram(const Tensor<float>&);
template Matrix<double> gram(const Tensor<double>&);
template GramSet<float> gram_set(const FeaturePyramid<float>&);
template GramSet<double> gram_set(const FeaturePyramid<double>&);
template double content_loss(const FeaturePyramid<float>&, const FeaturePyramid<float>&, int);
template double content_loss(const FeaturePyramid<double>&, const FeaturePyramid<double>&, int);
template double sentiment_loss(const FeaturePyramid<float>&, const FeaturePyramid<float>&);
template double sentiment_loss(const FeaturePyramid<double>&, const FeaturePyramid<double>&);
template double sentiment_loss(const FeaturePyramid<float>&, const GramSet<float>&);
template double sentiment_loss(const FeaturePyramid<double>&, const GramSet<double>&);
template LossBreakdown total_loss(const FeaturePyramid<float>&, const FeaturePyramid<float>&,
                                  const FeaturePyramid<float>&, const LossWeights&, int);
template LossBreakdown total_loss(const FeaturePyramid<double>&, const FeaturePyramid<double>&,
                                  const FeaturePyramid<double>&, const LossWeights&, int);
template class SentimentObjective<float>;
template class SentimentObjective<double>;
template LossBreakdown pixel_gradient(const SentimentObjective<float>&, const ImageTensor&, ImageTensor&);
template LossBreakdown pixel_gradient(const SentimentObjective<double>&, const ImageTensor&, ImageTensor&);

}  // namespace senti
