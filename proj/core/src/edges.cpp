#include "senti/edges.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <shared_mutex>

#include "senti/error.hpp"

namespace senti {

namespace {

struct LearnedSlot {
  std::shared_mutex mutex;
  LearnedEdgeDetector detector;
};

LearnedSlot& learned_slot() {
  static LearnedSlot slot;
  return slot;
}

}  // namespace

std::string_view to_string(EdgeBackendId id) noexcept {
  switch (id) {
    case EdgeBackendId::sobel: return "sobel";
    case EdgeBackendId::learned: return "learned";
  }
  return "unknown";
}

EdgeBackendId parse_edge_backend(std::string_view name) {
  if (name == "sobel") return EdgeBackendId::sobel;
  if (name == "learned") return EdgeBackendId::learned;
  fail(ErrorCode::InvalidArgument, "unknown edge backend '" + std::string(name) + "'");
}

void set_learned_edge_detector(LearnedEdgeDetector detector) {
  auto& slot = learned_slot();
  std::unique_lock lock(slot.mutex);
  slot.detector = std::move(detector);
}

bool learned_edge_detector_available() {
  auto& slot = learned_slot();
  std::shared_lock lock(slot.mutex);
  return static_cast<bool>(slot.detector);
}

GrayTensor sobel_magnitude(const GrayTensor& gray) {
  const int h = gray.height();
  const int w = gray.width();
  GrayTensor out(h, w);
  auto px = [&](int y, int x) {
    return static_cast<double>(gray.at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)));
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (px(y - 1, x + 1) + 2.0 * px(y, x + 1) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2.0 * px(y, x - 1) + px(y + 1, x - 1));
      const double gy = (px(y + 1, x - 1) + 2.0 * px(y + 1, x) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2.0 * px(y - 1, x) + px(y - 1, x + 1));
      out.at(y, x) = static_cast<float>(std::sqrt(gx * gx + gy * gy));
    }
  }
  return out;
}

void normalize_max(GrayTensor& map) {
  auto data = map.data();
  float peak = 0.0f;
  for (float v : data) peak = std::max(peak, std::isfinite(v) ? v : 0.0f);
  if (peak <= 0.0f) {
    std::fill(data.begin(), data.end(), 0.0f);
    return;
  }
  for (float& v : data) v = std::isfinite(v) ? std::clamp(v / peak, 0.0f, 1.0f) : 0.0f;
}

EdgeMap edge_response(const ImageTensor& img, EdgeBackendId backend) {
  GrayTensor response;
  if (backend == EdgeBackendId::learned) {
    auto& slot = learned_slot();
    std::shared_lock lock(slot.mutex);
    if (!slot.detector)
      fail(ErrorCode::BackendUnavailable, "learned edge backend requested but no detector is loaded");
    response = slot.detector(img);
    if (response.height() != img.height() || response.width() != img.width())
      fail(ErrorCode::ShapeMismatch, "learned edge detector changed the image shape");
  } else {
    response = sobel_magnitude(rgb_to_luma(img));
  }
  normalize_max(response);
  return EdgeMap{std::move(response)};
}

EdgeMap retrieval_signature(const ImageTensor& img, EdgeBackendId backend) {
  EdgeMap edges = edge_response(resize_to(img, kRetrievalSize, kRetrievalSize), backend);
  for (float& v : edges.map.data()) v = to_byte(v) / 255.0f;
  return edges;
}

}  // namespace senti
