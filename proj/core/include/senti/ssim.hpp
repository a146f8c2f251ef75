#pragma once

#include "senti/image.hpp"

namespace senti {

/// Windowed SSIM constants. Defaults are the usual 11x11 Gaussian window with
/// sigma 1.5 and K1/K2 = 0.01/0.03 over a unit dynamic range.
struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  /// Throws InvalidArgument unless the window is odd and >= 3 and all
  /// constants are positive.
  void validate() const;
};

/// Mean SSIM over every position where the window fits entirely inside the
/// image (no padding). Symmetric in its arguments bit-for-bit.
///
/// Throws ShapeMismatch when the shapes differ and InputTooSmall when either
/// side is shorter than the window.
double ssim(const GrayTensor& a, const GrayTensor& b, const SsimParams& params = {});

}  // namespace senti
