#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "senti/backbone.hpp"
#include "senti/error.hpp"

using namespace senti;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn, std::string* detail = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (detail) *detail = e.detail();
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool all_finite(const FeaturePyramid<float>& f) {
  for (const auto& level : f.levels)
    for (float v : level.values())
      if (!std::isfinite(v)) return false;
  return true;
}

class BothBackbones : public ::testing::TestWithParam<BackboneId> {};

}  // namespace

TEST(Backbone, DenseNetTapShapesAt224) {
  const auto& net = fixture::seeded_backbone<float>(BackboneId::densenet121);
  EXPECT_EQ(net.tap_channels(), (std::array<int, 5>{64, 64, 128, 256, 512}));
  const auto f = extract_features(net, ImageTensor(224, 224, 0.0f));
  const int sizes[] = {112, 56, 28, 14, 7};
  for (int i = 0; i < kTapCount; ++i) {
    EXPECT_EQ(f.levels[i].height(), sizes[i]);
    EXPECT_EQ(f.levels[i].width(), sizes[i]);
  }
  EXPECT_TRUE(all_finite(f));
}

TEST(Backbone, VggTapShapesAt224) {
  const auto& net = fixture::seeded_backbone<float>(BackboneId::vgg19);
  EXPECT_EQ(net.tap_channels(), (std::array<int, 5>{64, 128, 256, 512, 512}));
  const auto f = extract_features(net, ImageTensor(224, 224, 0.0f));
  const int sizes[] = {224, 112, 56, 28, 14};
  for (int i = 0; i < kTapCount; ++i) EXPECT_EQ(f.levels[i].height(), sizes[i]);
  EXPECT_TRUE(all_finite(f));
}

TEST_P(BothBackbones, Deterministic) {
  const auto& net = fixture::seeded_backbone<float>(GetParam());
  const ImageTensor img = fixture::random_image(64, 80, 1);
  const auto a = extract_features(net, img);
  const auto b = extract_features(net, img);
  for (int i = 0; i < kTapCount; ++i) EXPECT_EQ(a.levels[i], b.levels[i]);
  EXPECT_TRUE(all_finite(a));
  EXPECT_EQ(a.backbone, GetParam());
}

TEST_P(BothBackbones, TooSmallInputIsRejected) {
  const auto& net = fixture::seeded_backbone<float>(GetParam());
  EXPECT_EQ(code_of([&] { extract_features(net, ImageTensor(31, 20, 0.5f)); }), ErrorCode::InputTooSmall);
  EXPECT_NO_THROW(extract_features(net, ImageTensor(32, 32, 0.5f)));
}

TEST_P(BothBackbones, EveryTapHasAGradientPath) {
  // s = sum(f^i) for each level on its own; analytic vs central differences.
  const auto& net = fixture::seeded_backbone<double>(GetParam());
  const ImageTensor img = fixture::dithered_image(40, 40, 2);
  const auto& norm = net.spec().normalization;
  for (int level = 0; level < kTapCount; ++level) {
    auto sum_level = [&](const ImageTensor& x) {
      const auto f = net.extract(preprocess<double>(x, norm));
      double s = 0.0;
      for (double v : f.levels[level].values()) s += v;
      return s;
    };
    nn::Tape tape;
    const auto f = net.extract(preprocess<double>(img, norm), &tape);
    std::array<Tensor<double>, kTapCount> grads;
    const auto& target = f.levels[level];
    grads[level] = Tensor<double>(target.channels(), target.height(), target.width(), 1.0);
    const Tensor<double> dx = net.backward(tape, grads);
    ImageTensor analytic(img.height(), img.width());
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
          analytic.at(y, x, c) = static_cast<float>(dx.at(c, y, x) / norm.stddev[c]);
    for (const auto& s : fixture::check_pixel_gradient(sum_level, img, analytic, 4, 10 + level))
      EXPECT_LT(s.rel_error, 1e-2) << "level " << level + 1 << " pixel (" << s.y << "," << s.x << "," << s.c
                                   << ") analytic " << s.analytic << " numeric " << s.numeric;
  }
}

INSTANTIATE_TEST_SUITE_P(Backbones, BothBackbones,
                         ::testing::Values(BackboneId::densenet121, BackboneId::vgg19),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Backbone, FloatAndDoubleAgree) {
  const auto& f32 = fixture::seeded_backbone<float>(BackboneId::densenet121);
  const auto& f64 = fixture::seeded_backbone<double>(BackboneId::densenet121);
  const ImageTensor img = fixture::smooth_image(48, 48, 4);
  const auto a = extract_features(f32, img);
  const auto b = extract_features(f64, img);
  for (int i = 0; i < kTapCount; ++i) {
    double max_ref = 0.0, max_diff = 0.0;
    for (std::size_t k = 0; k < a.levels[i].size(); ++k) {
      max_ref = std::max(max_ref, std::abs(b.levels[i].data()[k]));
      max_diff = std::max(max_diff, std::abs(a.levels[i].data()[k] - b.levels[i].data()[k]));
    }
    EXPECT_LT(max_diff, 1e-4 * std::max(1.0, max_ref)) << "level " << i + 1;
  }
}

TEST(Preprocess, ImageNetConstants) {
  const auto black = preprocess<double>(ImageTensor(8, 8, 0.0f), Normalization{});
  EXPECT_NEAR(black.at(0, 3, 3), -0.485 / 0.229, 1e-6);
  EXPECT_NEAR(black.at(1, 3, 3), -0.456 / 0.224, 1e-6);
  EXPECT_NEAR(black.at(2, 3, 3), -0.406 / 0.225, 1e-6);
  EXPECT_NEAR(black.at(0, 0, 0), -2.118, 1e-3);
  EXPECT_NEAR(black.at(1, 0, 0), -2.036, 1e-3);
  EXPECT_NEAR(black.at(2, 0, 0), -1.804, 1e-3);

  ImageTensor mean(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      mean.at(y, x, 0) = 0.485f;
      mean.at(y, x, 1) = 0.456f;
      mean.at(y, x, 2) = 0.406f;
    }
  for (double v : preprocess<double>(mean, Normalization{}).values()) EXPECT_NEAR(v, 0.0, 1e-7);
}

TEST(Preprocess, InverseRecoversImage) {
  const ImageTensor img = fixture::random_image(12, 9, 3);
  const auto x = preprocess<float>(img, Normalization{});
  EXPECT_EQ(x.channels(), 3);
  EXPECT_EQ(x.height(), 12);
  EXPECT_EQ(x.width(), 9);
  const ImageTensor back = deprocess(x, Normalization{});
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(back.data()[i], img.data()[i], 1e-6);
}

TEST(WeightArchive, MissingKernelIsNamed) {
  WeightArchive archive = fixture::seeded_archive(BackboneId::vgg19);
  archive.tensors.erase("features.10.weight");
  std::string detail;
  EXPECT_EQ(code_of([&] { make_backbone<float>(BackboneSpec::defaults(BackboneId::vgg19), archive); }, &detail),
            ErrorCode::MissingTensor);
  EXPECT_EQ(detail, "features.10.weight");
}

TEST(WeightArchive, TransposedKernelIsShapeMismatch) {
  WeightArchive archive = fixture::seeded_archive(BackboneId::densenet121);
  auto& t = archive.tensors.at("features.denseblock1.denselayer2.conv1.weight");
  std::swap(t.shape[0], t.shape[1]);
  std::string detail;
  EXPECT_EQ(code_of([&] { make_backbone<float>(BackboneSpec::defaults(BackboneId::densenet121), archive); }, &detail),
            ErrorCode::ShapeMismatch);
  EXPECT_NE(detail.find("features.denseblock1.denselayer2.conv1.weight"), std::string::npos);
  EXPECT_NE(detail.find("[128, 96, 1, 1]"), std::string::npos);
}

TEST(WeightArchive, FileRoundTripAndIntegrity) {
  const fs::path dir = fixture::scratch_dir("archive");
  WeightArchive small;
  small.tensors["a.weight"] = {{2, 3}, {1, 2, 3, 4, 5, 6}};
  small.tensors["b"] = {{1}, {-7.5f}};
  small.metadata["note"] = "x";
  write_weight_archive(small, dir / "w.safetensors");
  const WeightArchive back = read_weight_archive(dir / "w.safetensors");
  EXPECT_EQ(back.tensors.at("a.weight").values, small.tensors.at("a.weight").values);
  EXPECT_EQ(back.tensors.at("a.weight").shape, small.tensors.at("a.weight").shape);
  EXPECT_EQ(back.metadata, small.metadata);

  {
    std::fstream f(dir / "w.safetensors", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-1, std::ios::end);
    f.put('\x7f');
  }
  EXPECT_EQ(code_of([&] { read_weight_archive(dir / "w.safetensors"); }), ErrorCode::FormatError);
  fs::remove(hash_sidecar_path(dir / "w.safetensors"));
  EXPECT_EQ(code_of([&] { read_weight_archive(dir / "w.safetensors"); }), ErrorCode::FormatError);
  EXPECT_EQ(code_of([&] { read_weight_archive(dir / "nothing.safetensors"); }), ErrorCode::NotFound);
}

TEST(WeightArchive, LoadFromDiskMatchesInMemory) {
  const fs::path file = fixture::weights_dir() / "densenet121.safetensors";
  const auto net = load_backbone<float>(BackboneSpec::defaults(BackboneId::densenet121), file);
  const ImageTensor img = fixture::smooth_image(40, 56, 6);
  const auto a = extract_features(net, img);
  const auto b = extract_features(fixture::seeded_backbone<float>(BackboneId::densenet121), img);
  for (int i = 0; i < kTapCount; ++i) EXPECT_EQ(a.levels[i], b.levels[i]);
}

TEST(WeightArchive, SeededWeightsAreReproducible) {
  const auto a = synthesize_weights(BackboneId::vgg19, 5);
  const auto b = synthesize_weights(BackboneId::vgg19, 5);
  EXPECT_EQ(a.tensors.at("features.28.weight").values, b.tensors.at("features.28.weight").values);
  const auto c = synthesize_weights(BackboneId::vgg19, 6);
  EXPECT_NE(a.tensors.at("features.0.weight").values, c.tensors.at("features.0.weight").values);
}

TEST(WeightManifest, DocsMatchTheCode) {
  for (auto id : {BackboneId::densenet121, BackboneId::vgg19}) {
    const fs::path doc = fs::path(SENTI_DOCS_DIR) / ("weights-manifest-" + std::string(to_string(id)) + ".txt");
    EXPECT_EQ(slurp(doc), format_weight_manifest(id)) << doc;
  }
}

TEST(WeightManifest, EveryKeyIsInTheSeededArchive) {
  for (auto id : {BackboneId::densenet121, BackboneId::vgg19}) {
    const auto& archive = fixture::seeded_archive(id);
    const auto keys = weight_manifest(id);
    EXPECT_EQ(keys.size(), archive.tensors.size());
    for (const auto& k : keys) EXPECT_NO_THROW(archive.require(k.name, k.shape)) << k.name;
  }
}

TEST(BackboneSpec, Validation) {
  auto spec = BackboneSpec::defaults(BackboneId::densenet121);
  EXPECT_EQ(spec.content_tap, 4);
  spec.content_tap = 6;
  EXPECT_THROW(spec.validate(), Error);
  EXPECT_EQ(parse_backbone("vgg19"), BackboneId::vgg19);
  EXPECT_THROW(parse_backbone("resnet50"), Error);
}
