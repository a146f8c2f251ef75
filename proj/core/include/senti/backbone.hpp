#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "senti/image.hpp"
#include "senti/nn.hpp"
#include "senti/tensor.hpp"
#include "senti/weights.hpp"

namespace senti {

enum class BackboneId { densenet121, vgg19 };

std::string_view to_string(BackboneId id) noexcept;
/// Throws InvalidArgument for unknown names.
BackboneId parse_backbone(std::string_view name);

inline constexpr int kTapCount = 5;

/// Per-channel input normalization; the defaults are the ImageNet statistics
/// the published classifiers were trained with.
struct Normalization {
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> stddev{0.229, 0.224, 0.225};
};

/// Which activations a backbone exposes.
///
/// Default taps: the network's first ReLU, then the first ReLU after each of
/// its four pooling stages. For densenet121 that is features.relu0 and
/// denseblock{1..4}.denselayer1.relu1; for vgg19 it is relu1_1 .. relu5_1
/// (features.1, 6, 11, 20, 29). Names follow torchvision module paths.
struct BackboneSpec {
  BackboneId id = BackboneId::densenet121;
  std::array<std::string, kTapCount> tap_names;
  int content_tap = 4;  // 1-based
  Normalization normalization;

  static BackboneSpec defaults(BackboneId id);
  void validate() const;
};

struct WeightKey {
  std::string name;
  std::vector<std::int64_t> shape;
};

/// Every tensor a backbone reads from its archive, in graph order.
std::vector<WeightKey> weight_manifest(BackboneId id);
/// One "name dim0 dim1 ..." line per key.
std::string format_weight_manifest(BackboneId id);

template <typename T>
struct FeaturePyramid {
  BackboneId backbone = BackboneId::densenet121;
  std::array<Tensor<T>, kTapCount> levels;
};

/// Frozen feature extractor with a gradient path back to its input.
/// Immutable after construction and safe to share between threads; each
/// caller owns its nn::Tape.
template <typename T>
class Backbone {
 public:
  Backbone(BackboneSpec spec, nn::Graph<T> graph);

  const BackboneSpec& spec() const noexcept { return spec_; }
  const nn::Graph<T>& graph() const noexcept { return graph_; }
  std::array<int, kTapCount> tap_channels() const;
  std::array<int, kTapCount> tap_nodes() const noexcept { return taps_; }

  /// `input` is a preprocessed [3, H, W] tensor with max(H, W) >= 32.
  /// Throws InputTooSmall otherwise.
  FeaturePyramid<T> extract(const Tensor<T>& input, nn::Tape* tape = nullptr) const;

  /// d(scalar)/d(input) from per-level gradients of a pass recorded with
  /// extract(). Empty tensors mean "no gradient at this level".
  Tensor<T> backward(const nn::Tape& tape, const std::array<Tensor<T>, kTapCount>& grads) const;

  template <typename U>
  Backbone<U> cast() const {
    return Backbone<U>(spec_, graph_.template cast<U>());
  }

 private:
  BackboneSpec spec_;
  nn::Graph<T> graph_;
  std::array<int, kTapCount> taps_{};
};

/// Builds a backbone from an in-memory archive. Throws MissingTensor or
/// ShapeMismatch naming the offending key.
template <typename T>
Backbone<T> make_backbone(const BackboneSpec& spec, const WeightArchive& archive);

/// read_weight_archive() followed by make_backbone().
template <typename T>
Backbone<T> load_backbone(const BackboneSpec& spec, const std::filesystem::path& weights);

template <typename T>
Tensor<T> preprocess(const ImageTensor& img, const Normalization& norm);

/// Inverse of preprocess(); does not clamp.
template <typename T>
ImageTensor deprocess(const Tensor<T>& x, const Normalization& norm);

template <typename T>
FeaturePyramid<T> extract_features(const Backbone<T>& backbone, const ImageTensor& img);

/// Deterministic stand-in weights for environments without the published
/// checkpoints: He-normal convolutions, then one calibration pass over a
/// synthetic image that sets batch-norm running statistics (densenet121) or
/// rescales each convolution to unit output variance (vgg19).
WeightArchive synthesize_weights(BackboneId id, std::uint64_t seed);

}  // namespace senti
