#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

double ssim(const senti::GrayTensor& a, const senti::GrayTensor& b, int window, double sigma, double k1, double k2,
            double range) {
  const int r = window / 2;
  Dense w(window, std::vector<double>(window));
  double total = 0.0;
  for (int i = 0; i < window; ++i)
    for (int j = 0; j < window; ++j) {
      const double di = i - r;
      const double dj = j - r;
      w[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      total += w[i][j];
    }
  for (auto& row : w)
    for (double& v : row) v /= total;

  const double c1 = (k1 * range) * (k1 * range);
  const double c2 = (k2 * range) * (k2 * range);
  double sum = 0.0;
  int count = 0;
  for (int y = 0; y + window <= a.height(); ++y) {
    for (int x = 0; x + window <= a.width(); ++x) {
      double ma = 0, mb = 0;
      for (int i = 0; i < window; ++i)
        for (int j = 0; j < window; ++j) {
          ma += w[i][j] * a.at(y + i, x + j);
          mb += w[i][j] * b.at(y + i, x + j);
        }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < window; ++i)
        for (int j = 0; j < window; ++j) {
          const double da = a.at(y + i, x + j) - ma;
          const double db = b.at(y + i, x + j) - mb;
          va += w[i][j] * da * da;
          vb += w[i][j] * db * db;
          cov += w[i][j] * da * db;
        }
      sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return sum / count;
}

double constant_ssim(double a, double b, double k1, double range) {
  const double c1 = (k1 * range) * (k1 * range);
  return (2 * a * b + c1) / (a * a + b * b + c1);
}

template <typename T>
Dense gram(const senti::Tensor<T>& f) {
  const int c = f.channels();
  const double n = static_cast<double>(c) * f.height() * f.width();
  Dense g(c, std::vector<double>(c, 0.0));
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      double acc = 0.0;
      for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x) acc += static_cast<double>(f.at(i, y, x)) * f.at(j, y, x);
      g[i][j] = acc / n;
    }
  return g;
}

double mse(const Dense& a, const Dense& b) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      acc += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
      ++n;
    }
  return acc / n;
}

template <typename T>
double content_loss(const senti::FeaturePyramid<T>& f, const senti::FeaturePyramid<T>& s, int tap) {
  const auto& a = f.levels[tap - 1];
  const auto& b = s.levels[tap - 1];
  double acc = 0.0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        const double d = static_cast<double>(a.at(c, y, x)) - b.at(c, y, x);
        acc += d * d;
      }
  return acc / (static_cast<double>(a.channels()) * a.height() * a.width());
}

template <typename T>
double sentiment_loss(const senti::FeaturePyramid<T>& f, const senti::FeaturePyramid<T>& t) {
  double acc = 0.0;
  for (int i = 0; i < senti::kTapCount; ++i) acc += mse(gram(f.levels[i]), gram(t.levels[i]));
  return acc / 5.0;
}

senti::GrayTensor sobel(const senti::GrayTensor& g) {
  static const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  static const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  senti::GrayTensor out(g.height(), g.width());
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) {
      double gx = 0, gy = 0;
      for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) {
          const double v = g.at(std::clamp(y + i, 0, g.height() - 1), std::clamp(x + j, 0, g.width() - 1));
          gx += kx[i + 1][j + 1] * v;
          gy += ky[i + 1][j + 1] * v;
        }
      out.at(y, x) = static_cast<float>(std::hypot(gx, gy));
    }
  return out;
}

template Dense gram(const senti::Tensor<float>&);
template Dense gram(const senti::Tensor<double>&);
template double content_loss(const senti::FeaturePyramid<float>&, const senti::FeaturePyramid<float>&, int);
template double content_loss(const senti::FeaturePyramid<double>&, const senti::FeaturePyramid<double>&, int);
template double sentiment_loss(const senti::FeaturePyramid<float>&, const senti::FeaturePyramid<float>&);
template double sentiment_loss(const senti::FeaturePyramid<double>&, const senti::FeaturePyramid<double>&);

}  // namespace oracle
