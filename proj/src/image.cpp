#include "nladstv/image.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace nladstv {

Image luminance(const Image& img) {
  if (img.channels() == 1) return img;
  require(img.channels() == 3, ErrorKind::unsupported_format,
          "luminance needs 1 or 3 channels, got " +
              std::to_string(img.channels()));
  Image out(img.width(), img.height(), 1);
  out.data() = (0.299 * img.channel(0) + 0.587 * img.channel(1) +
                0.114 * img.channel(2))
                   .cwiseMax(0.0)
                   .cwiseMin(1.0);
  return out;
}

double mean_squared_error(const Image& a, const Image& b) {
  require(a.same_shape(b), ErrorKind::shape, "image shapes differ");
  return (a.data() - b.data()).square().mean();
}

double psnr(const Image& ref, const Image& test, double peak) {
  require(peak > 0, ErrorKind::domain, "psnr peak must be positive");
  const double mse = mean_squared_error(ref, test);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

Image add_gaussian_noise(const Image& img, double sigma, RngSeed seed) {
  require(sigma >= 0, ErrorKind::domain, "noise sigma must be nonnegative");
  Image out = img;
  if (sigma == 0) return out;
  std::mt19937_64 engine(seed.value);
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& v : out.data()) v += normal(engine);
  return out;
}

double estimate_noise_sigma(const Image& img) {
  const int w = img.width(), h = img.height();
  if (w < 3 || h < 3) return 0.0;
  double total = 0;
  for (int c = 0; c < img.channels(); ++c) {
    auto p = img.plane(c);
    double acc = 0;
    for (int y = 1; y < h - 1; ++y)
      for (int x = 1; x < w - 1; ++x) {
        const double v = p(y - 1, x - 1) - 2 * p(y - 1, x) + p(y - 1, x + 1) -
                         2 * p(y, x - 1) + 4 * p(y, x) - 2 * p(y, x + 1) +
                         p(y + 1, x - 1) - 2 * p(y + 1, x) + p(y + 1, x + 1);
        acc += std::abs(v);
      }
    total += std::sqrt(std::numbers::pi / 2.0) * acc /
             (6.0 * (w - 2) * (h - 2));
  }
  return total / img.channels();
}

double sample_variance(const Image& img) {
  const double mean = img.data().mean();
  return (img.data() - mean).square().mean();
}

double dot(const Image& a, const Image& b) {
  require(a.same_shape(b), ErrorKind::shape, "image shapes differ");
  return (a.data() * b.data()).sum();
}

}  // namespace nladstv
