#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "nladstv/error.hpp"

namespace nladstv {

/// Planar multi-channel raster. Each channel is stored row-major and the
/// channels are stacked one after another, so `data()` is the vectorized
/// image used by every linear operator in the library.
template <typename Scalar_>
class ImageField {
 public:
  using Scalar = Scalar_;
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using PlaneArray =
      Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Plane = Eigen::Map<PlaneArray>;
  using ConstPlane = Eigen::Map<const PlaneArray>;

  ImageField() = default;

  ImageField(int width, int height, int channels = 1, Scalar fill = Scalar(0))
      : width_(width), height_(height), channels_(channels) {
    check_dims();
    data_ = Storage::Constant(size(), fill);
  }

  ImageField(int width, int height, int channels, Storage data)
      : width_(width), height_(height), channels_(channels),
        data_(std::move(data)) {
    check_dims();
    require(data_.size() == size(), ErrorKind::shape,
            "image data length does not match width*height*channels");
  }

  static ImageField zeros_like(const ImageField& other) {
    return ImageField(other.width_, other.height_, other.channels_);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  Eigen::Index pixels() const noexcept {
    return Eigen::Index(width_) * height_;
  }
  Eigen::Index size() const noexcept { return pixels() * channels_; }
  bool empty() const noexcept { return data_.size() == 0; }

  Storage& data() noexcept { return data_; }
  const Storage& data() const noexcept { return data_; }

  Scalar& operator()(int x, int y, int c = 0) {
    return data_[index(x, y, c)];
  }
  Scalar operator()(int x, int y, int c = 0) const {
    return data_[index(x, y, c)];
  }

  Eigen::Index index(int x, int y, int c = 0) const noexcept {
    return Eigen::Index(c) * pixels() + Eigen::Index(y) * width_ + x;
  }

  /// Channel `c` as a height x width array view.
  Plane plane(int c) { return Plane(data_.data() + c * pixels(), height_, width_); }
  ConstPlane plane(int c) const {
    return ConstPlane(data_.data() + c * pixels(), height_, width_);
  }

  auto channel(int c) { return data_.segment(c * pixels(), pixels()); }
  auto channel(int c) const { return data_.segment(c * pixels(), pixels()); }

  bool same_shape(const ImageField& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  bool all_finite() const { return data_.isFinite().all(); }

  template <typename Other>
  ImageField<Other> cast() const {
    return ImageField<Other>(width_, height_, channels_,
                             data_.template cast<Other>().eval());
  }

 private:
  void check_dims() const {
    require(width_ >= 1 && height_ >= 1, ErrorKind::shape,
            "image dimensions must be positive");
    require(channels_ >= 1, ErrorKind::shape, "image needs at least one channel");
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  Storage data_;
};

using Image = ImageField<double>;

/// Deterministic noise source. The same seed with the same parameters always
/// yields the same realization.
struct RngSeed {
  std::uint64_t value = 0;
};

inline constexpr double kPsnrCap = 999.0;

/// Rec.601 luma. Single-channel input is returned unchanged.
Image luminance(const Image& img);

/// PSNR over all samples jointly. Returns kPsnrCap when the images coincide.
double psnr(const Image& ref, const Image& test, double peak = 1.0);

double mean_squared_error(const Image& a, const Image& b);

/// Adds i.i.d. N(0, sigma^2) noise to every sample. Not clamped.
Image add_gaussian_noise(const Image& img, double sigma, RngSeed seed);

/// Immerkaer's Laplacian-difference estimate of the additive noise standard
/// deviation, averaged over channels.
double estimate_noise_sigma(const Image& img);

/// Population variance of all samples.
double sample_variance(const Image& img);

double dot(const Image& a, const Image& b);

}  // namespace nladstv
