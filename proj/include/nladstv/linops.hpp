#pragma once

#include <Eigen/Core>
#include <complex>
#include <memory>
#include <string>

#include "nladstv/image.hpp"

namespace nladstv {

/// Odd-sized filter taps, indexed (row, col) with the center at
/// (height/2, width/2).
struct BlurKernel {
  Eigen::ArrayXXd taps;

  int width() const { return static_cast<int>(taps.cols()); }
  int height() const { return static_cast<int>(taps.rows()); }
  double operator()(int dx, int dy) const {
    return taps(dy + height() / 2, dx + width() / 2);
  }

  /// Validates odd support and renormalizes to unit sum.
  static BlurKernel normalized(Eigen::ArrayXXd taps);

  Image as_image() const;
  static BlurKernel from_image(const Image& img);
};

BlurKernel gaussian_kernel(int support, double sigma);

/// Linear-motion PSF: a segment of `length` pixels through the kernel center
/// at `angle_degrees` (measured from +x toward +y, i.e. toward increasing row
/// index). Each tap is the length of the segment inside that pixel's unit
/// square, which anti-aliases oblique angles exactly. Cropped to the smallest
/// odd support containing every nonzero tap.
BlurKernel motion_kernel(int length, double angle_degrees);

/// Degradation operator H: identity (denoising) or periodic convolution.
class ForwardModel {
 public:
  enum class Kind { identity, convolution };

  static ForwardModel identity() { return ForwardModel(); }
  static ForwardModel convolution(BlurKernel kernel);

  Kind kind() const noexcept { return kind_; }
  bool is_identity() const noexcept { return kind_ == Kind::identity; }
  const BlurKernel& kernel() const;

 private:
  Kind kind_ = Kind::identity;
  BlurKernel kernel_;
};

/// Periodic convolution with a fixed kernel on a fixed raster size, with the
/// kernel spectrum computed once. FFT plans are cached per thread, so a
/// shared instance may be used concurrently.
class CirculantOperator {
 public:
  using Spectrum = Eigen::ArrayXXcd;

  CirculantOperator(const BlurKernel& kernel, int width, int height);

  Image apply(const Image& f) const;
  Image adjoint(const Image& g) const;
  /// H^T H f in one round trip.
  Image normal(const Image& f) const;
  /// conj(K) G / (|K|^2 + nsr), per channel.
  Image wiener(const Image& g, double nsr) const;

  const Spectrum& spectrum() const { return spectrum_; }

 private:
  template <typename Filter>
  Image filter(const Image& f, Filter&& per_frequency) const;

  int width_;
  int height_;
  Spectrum spectrum_;
};

/// A ForwardModel bound to a raster size; identity is a no-op.
class BoundForwardModel {
 public:
  BoundForwardModel(const ForwardModel& model, int width, int height);

  bool is_identity() const noexcept { return !circulant_; }
  Image apply(const Image& f) const;
  Image adjoint(const Image& g) const;
  Image normal(const Image& f) const;

 private:
  std::shared_ptr<const CirculantOperator> circulant_;
};

Image apply_forward(const ForwardModel& model, const Image& f);
Image apply_adjoint(const ForwardModel& model, const Image& g);

Image wiener_deblur(const Image& g, const BlurKernel& kernel, double nsr = 1e-2);

/// Per-pixel, per-channel forward differences.
struct GradientField {
  Image dx;
  Image dy;
};

/// Forward differences with a replicate boundary: the difference across the
/// last column (row) is zero.
GradientField grad(const Image& f);

/// Central differences (f[x+1] - f[x-1]) / 2 with a replicate boundary. Both
/// components are sampled at the pixel center and, unlike forward
/// differences, do not share a sample, so white noise leaves them
/// uncorrelated. Used for structure tensors.
GradientField central_grad(const Image& f);

/// Exactly -grad^T, so <grad f, X> = -<f, div X>.
Image div(const GradientField& field);

double dot(const GradientField& a, const GradientField& b);

/// Noise standard deviation giving the requested blurred SNR (dB).
double bsnr_sigma(const Image& blurred, double bsnr_db);

/// "Same"-size convolution with replicate padding, applied to each channel.
Image convolve_replicate(const Image& img, const BlurKernel& kernel);

}  // namespace nladstv
