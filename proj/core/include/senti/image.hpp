#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace senti {

/// Interleaved RGB float image, row-major [height][width][3].
///
/// Values are expected in [0, 1]; the container itself does not clamp so
/// that intermediate results can be inspected before save_image() clamps
/// them. is_valid() checks the full invariant (finite, in range, and at least
/// kMinSide pixels on each side) for consumers that need it.
class ImageTensor {
 public:
  static constexpr int kMinSide = 8;

  ImageTensor() = default;
  ImageTensor(int height, int width, float fill = 0.0f);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool is_valid() const noexcept;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// Single-channel float image, row-major [height][width], values in [0, 1].
class GrayTensor {
 public:
  GrayTensor() = default;
  GrayTensor(int height, int width, float fill = 0.0f);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  float at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  friend bool operator==(const GrayTensor&, const GrayTensor&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// round(clamp(v, 0, 1) * 255)
std::uint8_t to_byte(float v) noexcept;

// PNG or JPEG in; alpha dropped, EXIF orientation ignored, v/255 per channel.
ImageTensor load_image(const std::filesystem::path& path);
// 8-bit RGB PNG out.
void save_image(const ImageTensor& img, const std::filesystem::path& path);

GrayTensor load_gray_png(const std::filesystem::path& path);
void save_gray_png(const GrayTensor& img, const std::filesystem::path& path);

/// Bilinear resampling with half-pixel centers and edge clamping. Identical
/// dimensions return an exact copy.
ImageTensor resize_to(const ImageTensor& img, int height, int width);
GrayTensor resize_to(const GrayTensor& img, int height, int width);

/// Scales so the longer side equals `target`, rounding the shorter side to
/// the nearest pixel. Upscaling is allowed.
ImageTensor resize_long_side(const ImageTensor& img, int target);

/// Rec.709 luma.
GrayTensor rgb_to_luma(const ImageTensor& img);

}  // namespace senti
