#include "senti/ssim.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "senti/error.hpp"

namespace senti {

void SsimParams::validate() const {
  if (window < 3 || window % 2 == 0)
    fail(ErrorCode::InvalidArgument, "SSIM window must be odd and >= 3, got " + std::to_string(window));
  if (!(sigma > 0.0) || !(k1 > 0.0) || !(k2 > 0.0) || !(dynamic_range > 0.0))
    fail(ErrorCode::InvalidArgument, "SSIM sigma, k1, k2 and dynamic range must be positive");
}

namespace {

std::vector<double> gaussian_kernel(int window, double sigma) {
  std::vector<double> kernel(window);
  const int radius = window / 2;
  double total = 0.0;
  for (int i = 0; i < window; ++i) {
    const double d = i - radius;
    kernel[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    total += kernel[i];
  }
  for (double& k : kernel) k /= total;
  return kernel;
}

// Valid-mode separable filter of `plane` (h x w) into (h-n+1) x (w-n+1).
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::vector<double>& kernel) {
  const int n = static_cast<int>(kernel.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    const double* src = &plane[static_cast<std::size_t>(y) * w];
    double* dst = &rows[static_cast<std::size_t>(y) * ow];
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += kernel[k] * src[x + k];
      dst[x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    double* dst = &out[static_cast<std::size_t>(y) * ow];
    for (int k = 0; k < n; ++k) {
      const double* src = &rows[static_cast<std::size_t>(y + k) * ow];
      for (int x = 0; x < ow; ++x) dst[x] += kernel[k] * src[x];
    }
  }
  return out;
}

}  // namespace

double ssim(const GrayTensor& a, const GrayTensor& b, const SsimParams& params) {
  params.validate();
  if (a.height() != b.height() || a.width() != b.width())
    fail(ErrorCode::ShapeMismatch, "ssim operands differ: " + std::to_string(a.height()) + "x" +
                                       std::to_string(a.width()) + " vs " +
                                       std::to_string(b.height()) + "x" + std::to_string(b.width()));
  const int h = a.height();
  const int w = a.width();
  if (h < params.window || w < params.window)
    fail(ErrorCode::InputTooSmall, "ssim needs both sides >= window " + std::to_string(params.window));

  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
  for (std::size_t i = 0; i < n; ++i) {
    pa[i] = a.data()[i];
    pb[i] = b.data()[i];
    paa[i] = pa[i] * pa[i];
    pbb[i] = pb[i] * pb[i];
    pab[i] = pa[i] * pb[i];
  }
  const auto kernel = gaussian_kernel(params.window, params.sigma);
  const auto mu_a = filter_valid(pa, h, w, kernel);
  const auto mu_b = filter_valid(pb, h, w, kernel);
  const auto e_aa = filter_valid(paa, h, w, kernel);
  const auto e_bb = filter_valid(pbb, h, w, kernel);
  const auto e_ab = filter_valid(pab, h, w, kernel);

  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double var_a = e_aa[i] - ma * ma;
    const double var_b = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace senti
