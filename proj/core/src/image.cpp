#include "senti/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "senti/error.hpp"

namespace senti {

namespace fs = std::filesystem;

ImageTensor::ImageTensor(int height, int width, float fill)
    : height_(height), width_(width) {
  if (height < 0 || width < 0) fail(ErrorCode::InvalidArgument, "negative image size");
  data_.assign(static_cast<std::size_t>(height) * width * 3, fill);
}

bool ImageTensor::is_valid() const noexcept {
  if (height_ < kMinSide || width_ < kMinSide) return false;
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; });
}

GrayTensor::GrayTensor(int height, int width, float fill) : height_(height), width_(width) {
  if (height < 0 || width < 0) fail(ErrorCode::InvalidArgument, "negative image size");
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

std::uint8_t to_byte(float v) noexcept {
  if (!(v > 0.0f)) return 0;  // also catches NaN
  if (v >= 1.0f) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0f));
}

namespace {

void require_parent(const fs::path& path) {
  auto parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    fail(ErrorCode::IoError, "parent directory does not exist: " + parent.string());
  if (fs::is_directory(path)) fail(ErrorCode::IoError, "path is a directory: " + path.string());
}

cv::Mat read_mat(const fs::path& path, int flags) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) fail(ErrorCode::NotFound, path.string());
  cv::Mat mat;
  try {
    mat = cv::imread(path.string(), flags | cv::IMREAD_IGNORE_ORIENTATION);
  } catch (const cv::Exception& e) {
    fail(ErrorCode::DecodeError, path.string() + ": " + e.what());
  }
  if (mat.empty()) fail(ErrorCode::DecodeError, "cannot decode " + path.string());
  if (mat.depth() != CV_8U) mat.convertTo(mat, CV_8U, 1.0 / 256.0);
  return mat;
}

void write_mat(const cv::Mat& mat, const fs::path& path) {
  require_parent(path);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat, {cv::IMWRITE_PNG_COMPRESSION, 6});
  } catch (const cv::Exception& e) {
    fail(ErrorCode::IoError, path.string() + ": " + e.what());
  }
  if (!ok) fail(ErrorCode::IoError, "cannot write " + path.string());
}

struct Taps {
  int lo, hi;
  float frac;
};

// Half-pixel-center source coordinates for each destination index.
std::vector<Taps> sample_positions(int in, int out) {
  std::vector<Taps> taps(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double s = (i + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    int lo = static_cast<int>(std::floor(s));
    int hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, static_cast<float>(s - lo)};
  }
  return taps;
}

template <int Channels, typename Get, typename Set>
void bilinear(int in_h, int in_w, int out_h, int out_w, Get get, Set set) {
  const auto ys = sample_positions(in_h, out_h);
  const auto xs = sample_positions(in_w, out_w);
  for (int y = 0; y < out_h; ++y) {
    const auto& ty = ys[y];
    for (int x = 0; x < out_w; ++x) {
      const auto& tx = xs[x];
      for (int c = 0; c < Channels; ++c) {
        float top = get(ty.lo, tx.lo, c) * (1.0f - tx.frac) + get(ty.lo, tx.hi, c) * tx.frac;
        float bottom = get(ty.hi, tx.lo, c) * (1.0f - tx.frac) + get(ty.hi, tx.hi, c) * tx.frac;
        set(y, x, c, top * (1.0f - ty.frac) + bottom * ty.frac);
      }
    }
  }
}

void check_target(int height, int width) {
  if (height < 1 || width < 1)
    fail(ErrorCode::InvalidArgument,
         "resize target must be positive, got " + std::to_string(height) + "x" + std::to_string(width));
}

}  // namespace

ImageTensor load_image(const fs::path& path) {
  cv::Mat bgr = read_mat(path, cv::IMREAD_COLOR);
  ImageTensor img(bgr.rows, bgr.cols);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = row[x][2 - c] / 255.0f;
    }
  }
  return img;
}

void save_image(const ImageTensor& img, const fs::path& path) {
  cv::Mat bgr(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) row[x][2 - c] = to_byte(img.at(y, x, c));
    }
  }
  write_mat(bgr, path);
}

GrayTensor load_gray_png(const fs::path& path) {
  cv::Mat gray = read_mat(path, cv::IMREAD_GRAYSCALE);
  GrayTensor out(gray.rows, gray.cols);
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < gray.cols; ++x) out.at(y, x) = row[x] / 255.0f;
  }
  return out;
}

void save_gray_png(const GrayTensor& img, const fs::path& path) {
  cv::Mat gray(img.height(), img.width(), CV_8UC1);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width(); ++x) row[x] = to_byte(img.at(y, x));
  }
  write_mat(gray, path);
}

ImageTensor resize_to(const ImageTensor& img, int height, int width) {
  check_target(height, width);
  if (height == img.height() && width == img.width()) return img;
  ImageTensor out(height, width);
  bilinear<3>(
      img.height(), img.width(), height, width,
      [&](int y, int x, int c) { return img.at(y, x, c); },
      [&](int y, int x, int c, float v) { out.at(y, x, c) = v; });
  return out;
}

GrayTensor resize_to(const GrayTensor& img, int height, int width) {
  check_target(height, width);
  if (height == img.height() && width == img.width()) return img;
  GrayTensor out(height, width);
  bilinear<1>(
      img.height(), img.width(), height, width, [&](int y, int x, int) { return img.at(y, x); },
      [&](int y, int x, int, float v) { out.at(y, x) = v; });
  return out;
}

ImageTensor resize_long_side(const ImageTensor& img, int target) {
  if (target < ImageTensor::kMinSide)
    fail(ErrorCode::InvalidArgument, "long-side target must be >= 8, got " + std::to_string(target));
  if (img.empty()) fail(ErrorCode::InvalidArgument, "cannot resize an empty image");
  const int long_side = std::max(img.height(), img.width());
  const int short_side = std::min(img.height(), img.width());
  const int scaled_short = std::max(
      1, static_cast<int>(std::lround(static_cast<double>(short_side) * target / long_side)));
  if (img.width() >= img.height()) return resize_to(img, scaled_short, target);
  return resize_to(img, target, scaled_short);
}

GrayTensor rgb_to_luma(const ImageTensor& img) {
  GrayTensor out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double luma = 0.2126 * img.at(y, x, 0) + 0.7152 * img.at(y, x, 1) +
                          0.0722 * img.at(y, x, 2);
      out.at(y, x) = static_cast<float>(luma);
    }
  }
  return out;
}

}  // namespace senti
