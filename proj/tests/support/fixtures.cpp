#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <random>

#include <unistd.h>

namespace fs = std::filesystem;

namespace fixture {

namespace {

fs::path cache_root() { return fs::path(SENTI_TEST_CACHE_DIR); }

}  // namespace

const senti::WeightArchive& seeded_archive(senti::BackboneId id) {
  static std::mutex mutex;
  static std::map<senti::BackboneId, std::unique_ptr<senti::WeightArchive>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[id];
  if (!slot) slot = std::make_unique<senti::WeightArchive>(senti::synthesize_weights(id, kWeightSeed));
  return *slot;
}

template <typename T>
const senti::Backbone<T>& seeded_backbone(senti::BackboneId id) {
  static std::mutex mutex;
  static std::map<senti::BackboneId, std::unique_ptr<senti::Backbone<T>>> cache;
  const auto& archive = seeded_archive(id);
  std::lock_guard lock(mutex);
  auto& slot = cache[id];
  if (!slot)
    slot = std::make_unique<senti::Backbone<T>>(
        senti::make_backbone<T>(senti::BackboneSpec::defaults(id), archive));
  return *slot;
}

template const senti::Backbone<float>& seeded_backbone<float>(senti::BackboneId);
template const senti::Backbone<double>& seeded_backbone<double>(senti::BackboneId);

fs::path weights_dir() {
  const fs::path dir = cache_root() / "weights";
  static std::once_flag once;
  std::call_once(once, [&] {
    fs::create_directories(dir);
    for (auto id : {senti::BackboneId::densenet121, senti::BackboneId::vgg19}) {
      const fs::path final = dir / (std::string(senti::to_string(id)) + ".safetensors");
      if (fs::exists(final) && fs::exists(senti::hash_sidecar_path(final))) continue;
      // ctest may run several test processes at once; publish by rename.
      const fs::path tmp = dir / ("tmp-" + std::to_string(::getpid()));
      fs::create_directories(tmp);
      const fs::path staged = tmp / final.filename();
      senti::write_weight_archive(seeded_archive(id), staged);
      fs::rename(staged, final);
      fs::rename(senti::hash_sidecar_path(staged), senti::hash_sidecar_path(final));
      fs::remove_all(tmp);
    }
  });
  return dir;
}

fs::path scratch_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  const fs::path dir =
      cache_root() / "scratch" / (name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path desk_dir() { return fs::path(SENTI_DESK_DIR); }

senti::ImageTensor random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  senti::ImageTensor img(h, w);
  for (float& v : img.data()) v = u(rng);
  return img;
}

senti::GrayTensor random_gray(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  senti::GrayTensor img(h, w);
  for (float& v : img.data()) v = u(rng);
  return img;
}

senti::ImageTensor smooth_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double fx[3], fy[3], ph[3];
  for (int c = 0; c < 3; ++c) {
    fx[c] = 1.0 + 3.0 * u(rng);
    fy[c] = 1.0 + 3.0 * u(rng);
    ph[c] = 6.28 * u(rng);
  }
  const double cy = h * (0.3 + 0.4 * u(rng));
  const double cx = w * (0.3 + 0.4 * u(rng));
  const double radius = std::min(h, w) * 0.25;
  senti::ImageTensor img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = 0.5 + 0.3 * std::sin(6.28 * (fx[c] * x / w + fy[c] * y / h) + ph[c]);
        if (std::hypot(y - cy, x - cx) < radius) v = 0.15 + 0.3 * c;
        img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
  return img;
}

senti::ImageTensor dithered_image(int h, int w, std::uint64_t seed) {
  senti::ImageTensor img = smooth_image(h, w, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<float> u(-0.03f, 0.03f);
  for (float& v : img.data()) v = std::clamp(v + u(rng), 0.0f, 1.0f);
  return img;
}

const std::vector<std::pair<std::string, std::string>>& table_one_vocabulary() {
  static const std::vector<std::pair<std::string, std::string>> vocab{
      // positive
      {"home", "warm"},
      {"river", "clear"},
      {"water", "clear"},
      {"mountain", "clear"},
      {"mountain", "scenic"},
      {"lake", "clear"},
      {"city", "lovely"},
      {"city", "bright"},
      {"city", "great"},
      // negative
      {"room", "dark"},
      {"water", "muddy"},
      {"river", "muddy"},
      {"mountains", "misty"},
      {"hill", "rough"},
      {"lake", "misty"},
      {"landscape", "harsh"},
      {"city", "poor"},
  };
  return vocab;
}

}  // namespace fixture
