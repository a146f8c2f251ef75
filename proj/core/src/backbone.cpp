#include "senti/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "senti/error.hpp"

namespace senti {

namespace fs = std::filesystem;

std::string_view to_string(BackboneId id) noexcept {
  switch (id) {
    case BackboneId::densenet121: return "densenet121";
    case BackboneId::vgg19: return "vgg19";
  }
  return "unknown";
}

BackboneId parse_backbone(std::string_view name) {
  if (name == "densenet121") return BackboneId::densenet121;
  if (name == "vgg19") return BackboneId::vgg19;
  fail(ErrorCode::InvalidArgument, "unknown backbone '" + std::string(name) + "'");
}

BackboneSpec BackboneSpec::defaults(BackboneId id) {
  BackboneSpec spec;
  spec.id = id;
  if (id == BackboneId::densenet121) {
    spec.tap_names = {"features.relu0", "features.denseblock1.denselayer1.relu1",
                      "features.denseblock2.denselayer1.relu1",
                      "features.denseblock3.denselayer1.relu1",
                      "features.denseblock4.denselayer1.relu1"};
  } else {
    spec.tap_names = {"features.1", "features.6", "features.11", "features.20", "features.29"};
  }
  return spec;
}

void BackboneSpec::validate() const {
  if (content_tap < 1 || content_tap > kTapCount)
    fail(ErrorCode::InvalidArgument, "content tap must be in 1..5, got " + std::to_string(content_tap));
  for (double s : normalization.stddev) {
    if (!(s > 0.0)) fail(ErrorCode::InvalidArgument, "normalization std must be positive");
  }
}

namespace {

using ParamSource =
    std::function<std::vector<float>(const std::string& key, const std::vector<std::int64_t>& shape)>;

class GraphBuilder {
 public:
  explicit GraphBuilder(const ParamSource& params) : params_(params) {}

  int conv(const std::string& name, int input, int in, int out, int kernel, int stride, int pad,
           bool bias) {
    nn::Conv<float> op;
    op.in_channels = in;
    op.out_channels = out;
    op.kernel = kernel;
    op.stride = stride;
    op.pad = pad;
    op.weight = params_(name + ".weight", {out, in, kernel, kernel});
    if (bias) op.bias = params_(name + ".bias", {out});
    return graph_.add(name, std::move(op), {input});
  }

  int batchnorm(const std::string& name, int input, int channels) {
    nn::BatchNorm<float> op;
    op.gamma = params_(name + ".weight", {channels});
    op.beta = params_(name + ".bias", {channels});
    op.running_mean = params_(name + ".running_mean", {channels});
    op.running_var = params_(name + ".running_var", {channels});
    return graph_.add(name, std::move(op), {input});
  }

  int relu(const std::string& name, int input) { return graph_.add(name, nn::Relu{}, {input}); }
  int maxpool(const std::string& name, int input, int kernel, int stride, int pad) {
    return graph_.add(name, nn::MaxPool{kernel, stride, pad}, {input});
  }
  int avgpool(const std::string& name, int input) {
    return graph_.add(name, nn::AvgPool{2, 2}, {input});
  }
  int concat(const std::string& name, std::vector<int> inputs) {
    return graph_.add(name, nn::Concat{}, std::move(inputs));
  }

  nn::Graph<float> take() { return std::move(graph_); }

 private:
  const ParamSource& params_;
  nn::Graph<float> graph_;
};

// torchvision densenet121, truncated after denseblock4.denselayer1.relu1.
nn::Graph<float> build_densenet121(const ParamSource& params) {
  constexpr int kGrowth = 32;
  constexpr int kBottleneck = 4 * kGrowth;
  constexpr int kLayers[] = {6, 12, 24, 16};

  GraphBuilder b(params);
  int x = b.conv("features.conv0", 0, 3, 64, 7, 2, 3, false);
  x = b.batchnorm("features.norm0", x, 64);
  x = b.relu("features.relu0", x);
  x = b.maxpool("features.pool0", x, 3, 2, 1);
  int channels = 64;
  for (int block = 1; block <= 4; ++block) {
    const std::string block_name = "features.denseblock" + std::to_string(block);
    const int layers = block == 4 ? 1 : kLayers[block - 1];
    for (int layer = 1; layer <= layers; ++layer) {
      const std::string name = block_name + ".denselayer" + std::to_string(layer);
      int y = b.batchnorm(name + ".norm1", x, channels);
      y = b.relu(name + ".relu1", y);
      if (block == 4) break;
      y = b.conv(name + ".conv1", y, channels, kBottleneck, 1, 1, 0, false);
      y = b.batchnorm(name + ".norm2", y, kBottleneck);
      y = b.relu(name + ".relu2", y);
      y = b.conv(name + ".conv2", y, kBottleneck, kGrowth, 3, 1, 1, false);
      x = b.concat(name + ".concat", {x, y});
      channels += kGrowth;
    }
    if (block == 4) break;
    const std::string name = "features.transition" + std::to_string(block);
    x = b.batchnorm(name + ".norm", x, channels);
    x = b.relu(name + ".relu", x);
    x = b.conv(name + ".conv", x, channels, channels / 2, 1, 1, 0, false);
    channels /= 2;
    x = b.avgpool(name + ".pool", x);
  }
  return b.take();
}

// torchvision vgg19 `features`, truncated after index 29 (relu5_1).
nn::Graph<float> build_vgg19(const ParamSource& params) {
  constexpr int kPool = -1;
  constexpr int kConfig[] = {64,  64,  kPool, 128, 128, kPool, 256, 256, 256, 256, kPool,
                             512, 512, 512,   512, kPool, 512};
  GraphBuilder b(params);
  int x = 0;
  int channels = 3;
  int index = 0;
  for (int width : kConfig) {
    if (width == kPool) {
      x = b.maxpool("features." + std::to_string(index++), x, 2, 2, 0);
      continue;
    }
    x = b.conv("features." + std::to_string(index++), x, channels, width, 3, 1, 1, true);
    x = b.relu("features." + std::to_string(index++), x);
    channels = width;
  }
  return b.take();
}

nn::Graph<float> build_graph(BackboneId id, const ParamSource& params) {
  return id == BackboneId::densenet121 ? build_densenet121(params) : build_vgg19(params);
}

std::string join_shape(const std::vector<std::int64_t>& shape) {
  std::string out;
  for (auto d : shape) out += " " + std::to_string(d);
  return out;
}

}  // namespace

std::vector<WeightKey> weight_manifest(BackboneId id) {
  std::vector<WeightKey> keys;
  build_graph(id, [&](const std::string& key, const std::vector<std::int64_t>& shape) {
    keys.push_back({key, shape});
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return std::vector<float>(static_cast<std::size_t>(n), key.ends_with("running_var") ? 1.0f : 0.0f);
  });
  return keys;
}

std::string format_weight_manifest(BackboneId id) {
  std::ostringstream out;
  out << "# " << to_string(id) << " weight archive keys (name followed by shape)\n";
  for (const auto& key : weight_manifest(id)) out << key.name << join_shape(key.shape) << "\n";
  return out.str();
}

template <typename T>
Backbone<T>::Backbone(BackboneSpec spec, nn::Graph<T> graph)
    : spec_(std::move(spec)), graph_(std::move(graph)) {
  spec_.validate();
  int previous = 0;
  for (int i = 0; i < kTapCount; ++i) {
    const int node = graph_.find(spec_.tap_names[i]);
    if (node < 0)
      fail(ErrorCode::InvalidArgument, "tap '" + spec_.tap_names[i] + "' is not a layer of " +
                                           std::string(to_string(spec_.id)));
    if (node <= previous)
      fail(ErrorCode::InvalidArgument, "taps must be ordered from shallow to deep");
    taps_[i] = previous = node;
  }
}

template <typename T>
std::array<int, kTapCount> Backbone<T>::tap_channels() const {
  const auto shapes = graph_.infer_shapes({3, 224, 224});
  std::array<int, kTapCount> channels{};
  for (int i = 0; i < kTapCount; ++i) channels[i] = shapes[taps_[i]].channels;
  return channels;
}

template <typename T>
FeaturePyramid<T> Backbone<T>::extract(const Tensor<T>& input, nn::Tape* tape) const {
  if (input.channels() != 3) fail(ErrorCode::ShapeMismatch, "backbone input must have 3 channels");
  if (std::max(input.height(), input.width()) < 32)
    fail(ErrorCode::InputTooSmall, "backbone input long side must be >= 32, got " +
                                       std::to_string(std::max(input.height(), input.width())));
  auto outputs = graph_.run(input, taps_, tape);
  FeaturePyramid<T> pyramid;
  pyramid.backbone = spec_.id;
  for (int i = 0; i < kTapCount; ++i) pyramid.levels[i] = std::move(outputs[i]);
  return pyramid;
}

template <typename T>
Tensor<T> Backbone<T>::backward(const nn::Tape& tape,
                                const std::array<Tensor<T>, kTapCount>& grads) const {
  std::vector<int> nodes;
  std::vector<Tensor<T>> seeds;
  for (int i = 0; i < kTapCount; ++i) {
    if (grads[i].empty()) continue;
    nodes.push_back(taps_[i]);
    seeds.push_back(grads[i]);
  }
  return graph_.backward(tape, nodes, seeds);
}

template <typename T>
Backbone<T> make_backbone(const BackboneSpec& spec, const WeightArchive& archive) {
  auto graph = build_graph(spec.id, [&](const std::string& key, const std::vector<std::int64_t>& shape) {
    return archive.require(key, shape).values;
  });
  if constexpr (std::is_same_v<T, float>) {
    return Backbone<float>(spec, std::move(graph));
  } else {
    return Backbone<T>(spec, graph.template cast<T>());
  }
}

template <typename T>
Backbone<T> load_backbone(const BackboneSpec& spec, const fs::path& weights) {
  return make_backbone<T>(spec, read_weight_archive(weights));
}

template <typename T>
Tensor<T> preprocess(const ImageTensor& img, const Normalization& norm) {
  Tensor<T> out(3, img.height(), img.width());
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        out.at(c, y, x) = static_cast<T>((img.at(y, x, c) - norm.mean[c]) / norm.stddev[c]);
      }
    }
  }
  return out;
}

template <typename T>
ImageTensor deprocess(const Tensor<T>& x, const Normalization& norm) {
  if (x.channels() != 3) fail(ErrorCode::ShapeMismatch, "deprocess expects 3 channels");
  ImageTensor out(x.height(), x.width());
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < x.height(); ++y) {
      for (int xx = 0; xx < x.width(); ++xx) {
        out.at(y, xx, c) = static_cast<float>(x.at(c, y, xx) * norm.stddev[c] + norm.mean[c]);
      }
    }
  }
  return out;
}

template <typename T>
FeaturePyramid<T> extract_features(const Backbone<T>& backbone, const ImageTensor& img) {
  return backbone.extract(preprocess<T>(img, backbone.spec().normalization));
}

namespace {

// mt19937_64 is fully specified by the standard; std::normal_distribution is
// not, so draw normals with Box-Muller for cross-platform identical weights.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Smooth gradients, blobs, stripes and step edges with mild noise.
ImageTensor calibration_image(std::uint64_t seed) {
  constexpr int kSize = 256;
  NormalStream rng(seed ^ 0x9E3779B97F4A7C15ull);
  ImageTensor img(kSize, kSize);
  std::array<double, 3> base{rng.uniform(), rng.uniform(), rng.uniform()};
  std::array<double, 3> slope{rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5};
  struct Blob {
    double cy, cx, radius;
    std::array<double, 3> color;
  };
  std::vector<Blob> blobs(12);
  for (auto& blob : blobs)
    blob = {rng.uniform() * kSize, rng.uniform() * kSize, 8 + rng.uniform() * 48,
            {rng.uniform(), rng.uniform(), rng.uniform()}};
  const double freq = 0.05 + 0.2 * rng.uniform();
  for (int y = 0; y < kSize; ++y) {
    for (int x = 0; x < kSize; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = base[c] + slope[c] * (x + y) / kSize;
        if (x > kSize / 2 && y < kSize / 2) v += 0.25 * std::sin(freq * (x + 2 * y) + c);
        if (y > 3 * kSize / 4) v = (x / 16) % 2 ? 0.9 - 0.2 * c : 0.1 + 0.2 * c;
        for (const auto& blob : blobs) {
          const double d = std::hypot(y - blob.cy, x - blob.cx);
          if (d < blob.radius) v = 0.5 * v + 0.5 * blob.color[c];
        }
        v += 0.03 * rng.next();
        img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

void channel_stats(const Tensor<float>& x, std::vector<float>& mean, std::vector<float>& var) {
  mean.assign(x.channels(), 0.0f);
  var.assign(x.channels(), 1.0f);
  for (int c = 0; c < x.channels(); ++c) {
    double sum = 0.0;
    double sq = 0.0;
    for (float v : x.channel(c)) {
      sum += v;
      sq += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(x.plane());
    const double m = sum / n;
    mean[c] = static_cast<float>(m);
    var[c] = static_cast<float>(std::max(sq / n - m * m, 1e-6));
  }
}

}  // namespace

WeightArchive synthesize_weights(BackboneId id, std::uint64_t seed) {
  WeightArchive archive;
  NormalStream rng(seed);
  auto graph = build_graph(id, [&](const std::string& key, const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<float> values(static_cast<std::size_t>(n), 0.0f);
    if (shape.size() == 4) {
      const double stddev = std::sqrt(2.0 / static_cast<double>(shape[1] * shape[2] * shape[3]));
      for (float& v : values) v = static_cast<float>(stddev * rng.next());
    } else if (key.ends_with(".running_var") || (key.ends_with(".weight") && shape.size() == 1)) {
      std::fill(values.begin(), values.end(), 1.0f);
    }
    archive.tensors[key] = NamedTensor{shape, values};
    return values;
  });

  const auto spec = BackboneSpec::defaults(id);
  const Tensor<float> input = preprocess<float>(calibration_image(seed), spec.normalization);
  const int last = graph.find(spec.tap_names.back());
  graph.calibrate(input, last,
                  [&](int, nn::Node<float>& node, std::span<const Tensor<float>* const> inputs) {
                    if (auto* bn = std::get_if<nn::BatchNorm<float>>(&node.op)) {
                      channel_stats(*inputs[0], bn->running_mean, bn->running_var);
                      bn->refold();
                      archive.tensors[node.name + ".running_mean"].values = bn->running_mean;
                      archive.tensors[node.name + ".running_var"].values = bn->running_var;
                    } else if (auto* conv = std::get_if<nn::Conv<float>>(&node.op);
                               conv && id == BackboneId::vgg19) {
                      const auto out = nn::conv_forward(*conv, *inputs[0]);
                      double sum = 0.0;
                      double sq = 0.0;
                      for (float v : out.values()) {
                        sum += v;
                        sq += static_cast<double>(v) * v;
                      }
                      const double n = static_cast<double>(out.size());
                      const double stddev = std::sqrt(std::max(sq / n - (sum / n) * (sum / n), 1e-12));
                      for (float& w : conv->weight) w = static_cast<float>(w / stddev);
                      archive.tensors[node.name + ".weight"].values = conv->weight;
                    }
                  });

  archive.metadata["backbone"] = std::string(to_string(id));
  archive.metadata["origin"] = "seeded";
  archive.metadata["seed"] = std::to_string(seed);
  return archive;
}

template class Backbone<float>;
template class Backbone<double>;
template Backbone<float> make_backbone<float>(const BackboneSpec&, const WeightArchive&);
template Backbone<double> make_backbone<double>(const BackboneSpec&, const WeightArchive&);
template Backbone<float> load_backbone<float>(const BackboneSpec&, const fs::path&);
template Backbone<double> load_backbone<double>(const BackboneSpec&, const fs::path&);
template Tensor<float> preprocess<float>(const ImageTensor&, const Normalization&);
template Tensor<double> preprocess<double>(const ImageTensor&, const Normalization&);
template ImageTensor deprocess<float>(const Tensor<float>&, const Normalization&);
template ImageTensor deprocess<double>(const Tensor<double>&, const Normalization&);
template FeaturePyramid<float> extract_features<float>(const Backbone<float>&, const ImageTensor&);
template FeaturePyramid<double> extract_features<double>(const Backbone<double>&, const ImageTensor&);

}  // namespace senti
