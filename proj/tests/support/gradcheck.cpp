#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fixture {

std::vector<GradSample> check_pixel_gradient(const std::function<double(const senti::ImageTensor&)>& loss,
                                             const senti::ImageTensor& img, const senti::ImageTensor& analytic,
                                             int samples, std::uint64_t seed, double h, double floor) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ys(0, img.height() - 1), xs(0, img.width() - 1), cs(0, 2);
  std::vector<GradSample> out;
  senti::ImageTensor probe = img;
  for (int i = 0; i < samples; ++i) {
    GradSample s;
    s.y = ys(rng);
    s.x = xs(rng);
    s.c = cs(rng);
    const float v = img.at(s.y, s.x, s.c);
    // The image stores floats, so divide by the step that was really taken.
    const float up = static_cast<float>(v + h);
    const float down = static_cast<float>(v - h);
    probe.at(s.y, s.x, s.c) = up;
    const double f_up = loss(probe);
    probe.at(s.y, s.x, s.c) = down;
    const double f_down = loss(probe);
    probe.at(s.y, s.x, s.c) = v;
    s.numeric = (f_up - f_down) / (static_cast<double>(up) - static_cast<double>(down));
    s.analytic = analytic.at(s.y, s.x, s.c);
    s.rel_error = std::abs(s.analytic - s.numeric) / std::max({std::abs(s.analytic), std::abs(s.numeric), floor});
    out.push_back(s);
  }
  return out;
}

}  // namespace fixture
