#include "nladstv/linops.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace nladstv {
namespace {

using Complex = std::complex<double>;
using ComplexPlane =
    Eigen::Array<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// 2-D transform done as row passes then column passes.
class Fft2 {
 public:
  void forward(ComplexPlane& a) { run(a, false); }
  void inverse(ComplexPlane& a) { run(a, true); }

 private:
  void run(ComplexPlane& a, bool inverse) {
    const Eigen::Index h = a.rows(), w = a.cols();
    row_.resize(w);
    col_.resize(h);
    col_out_.resize(h);
    for (Eigen::Index y = 0; y < h; ++y) {
      Complex* row = a.data() + y * w;
      if (inverse)
        fft_.inv(row_.data(), row, w);
      else
        fft_.fwd(row_.data(), row, w);
      std::copy(row_.begin(), row_.end(), row);
    }
    for (Eigen::Index x = 0; x < w; ++x) {
      for (Eigen::Index y = 0; y < h; ++y) col_[y] = a(y, x);
      if (inverse)
        fft_.inv(col_out_.data(), col_.data(), h);
      else
        fft_.fwd(col_out_.data(), col_.data(), h);
      for (Eigen::Index y = 0; y < h; ++y) a(y, x) = col_out_[y];
    }
  }

  Eigen::FFT<double> fft_;
  std::vector<Complex> row_, col_, col_out_;
};

thread_local Fft2 tls_fft;

ComplexPlane to_complex(const Image& img, int c) {
  return img.plane(c).cast<Complex>();
}

}  // namespace

BlurKernel BlurKernel::normalized(Eigen::ArrayXXd taps) {
  require(taps.rows() % 2 == 1 && taps.cols() % 2 == 1, ErrorKind::domain,
          "kernel support must be odd");
  const double sum = taps.sum();
  require(std::isfinite(sum) && sum != 0.0, ErrorKind::domain,
          "kernel taps must have a finite nonzero sum");
  return BlurKernel{taps / sum};
}

Image BlurKernel::as_image() const {
  Image img(width(), height(), 1);
  img.plane(0) = taps;
  return img;
}

BlurKernel BlurKernel::from_image(const Image& img) {
  require(img.channels() == 1, ErrorKind::unsupported_format,
          "kernel float-map must have one channel");
  return normalized(img.plane(0));
}

BlurKernel gaussian_kernel(int support, double sigma) {
  require(support >= 1 && support % 2 == 1, ErrorKind::domain,
          "gaussian support must be odd and positive");
  require(sigma > 0, ErrorKind::domain, "gaussian sigma must be positive");
  const int r = support / 2;
  Eigen::ArrayXXd taps(support, support);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      taps(dy + r, dx + r) = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
  return BlurKernel::normalized(std::move(taps));
}

BlurKernel motion_kernel(int length, double angle_degrees) {
  require(length >= 1, ErrorKind::domain, "motion length must be at least 1");
  const double a = angle_degrees * std::numbers::pi / 180.0;
  const double ux = std::cos(a), uy = std::sin(a);
  const double half = 0.5 * length;
  const int reach = static_cast<int>(std::ceil(half)) + 1;
  const int full = 2 * reach + 1;

  // Liang-Barsky clip of the segment p(t) = t*u, t in [-half, half],
  // against the unit square centered on each pixel.
  auto covered = [&](int px, int py) {
    double t0 = -half, t1 = half;
    auto clip = [&](double dir, double lo, double hi) {
      if (std::abs(dir) < 1e-15) return lo <= 0.0 && 0.0 <= hi;
      double ta = lo / dir, tb = hi / dir;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      return t0 < t1;
    };
    if (!clip(ux, px - 0.5, px + 0.5)) return 0.0;
    if (!clip(uy, py - 0.5, py + 0.5)) return 0.0;
    return t1 - t0;
  };

  Eigen::ArrayXXd big = Eigen::ArrayXXd::Zero(full, full);
  for (int py = -reach; py <= reach; ++py)
    for (int px = -reach; px <= reach; ++px)
      big(py + reach, px + reach) = covered(px, py);

  const double eps = 1e-10 * length;
  int rx = 0, ry = 0;
  for (int py = -reach; py <= reach; ++py)
    for (int px = -reach; px <= reach; ++px)
      if (big(py + reach, px + reach) > eps) {
        rx = std::max(rx, std::abs(px));
        ry = std::max(ry, std::abs(py));
      } else {
        big(py + reach, px + reach) = 0.0;
      }
  return BlurKernel::normalized(
      big.block(reach - ry, reach - rx, 2 * ry + 1, 2 * rx + 1));
}

ForwardModel ForwardModel::convolution(BlurKernel kernel) {
  ForwardModel m;
  m.kind_ = Kind::convolution;
  m.kernel_ = BlurKernel::normalized(std::move(kernel.taps));
  return m;
}

const BlurKernel& ForwardModel::kernel() const {
  require(kind_ == Kind::convolution, ErrorKind::configuration,
          "identity forward model has no kernel");
  return kernel_;
}

CirculantOperator::CirculantOperator(const BlurKernel& kernel, int width,
                                     int height)
    : width_(width), height_(height) {
  ComplexPlane k = ComplexPlane::Zero(height, width);
  const int rx = kernel.width() / 2, ry = kernel.height() / 2;
  for (int dy = -ry; dy <= ry; ++dy)
    for (int dx = -rx; dx <= rx; ++dx) {
      const int y = ((dy % height) + height) % height;
      const int x = ((dx % width) + width) % width;
      k(y, x) += kernel(dx, dy);
    }
  tls_fft.forward(k);
  spectrum_ = k;
}

template <typename Filter>
Image CirculantOperator::filter(const Image& f, Filter&& per_frequency) const {
  require(f.width() == width_ && f.height() == height_, ErrorKind::shape,
          "image size does not match the bound operator");
  Image out = Image::zeros_like(f);
  for (int c = 0; c < f.channels(); ++c) {
    ComplexPlane a = to_complex(f, c);
    tls_fft.forward(a);
    a = per_frequency(a);
    tls_fft.inverse(a);
    out.plane(c) = a.real();
  }
  return out;
}

Image CirculantOperator::apply(const Image& f) const {
  return filter(f, [&](const ComplexPlane& a) -> ComplexPlane { return a * spectrum_; });
}

Image CirculantOperator::adjoint(const Image& g) const {
  return filter(g, [&](const ComplexPlane& a) -> ComplexPlane {
    return a * spectrum_.conjugate();
  });
}

Image CirculantOperator::normal(const Image& f) const {
  return filter(f, [&](const ComplexPlane& a) -> ComplexPlane {
    return a * spectrum_.abs2().cast<Complex>();
  });
}

Image CirculantOperator::wiener(const Image& g, double nsr) const {
  require(nsr >= 0, ErrorKind::domain, "wiener nsr must be nonnegative");
  return filter(g, [&](const ComplexPlane& a) -> ComplexPlane {
    return a * spectrum_.conjugate() / (spectrum_.abs2() + nsr).cast<Complex>();
  });
}

BoundForwardModel::BoundForwardModel(const ForwardModel& model, int width,
                                     int height) {
  if (!model.is_identity())
    circulant_ = std::make_shared<CirculantOperator>(model.kernel(), width, height);
}

Image BoundForwardModel::apply(const Image& f) const {
  return circulant_ ? circulant_->apply(f) : f;
}

Image BoundForwardModel::adjoint(const Image& g) const {
  return circulant_ ? circulant_->adjoint(g) : g;
}

Image BoundForwardModel::normal(const Image& f) const {
  return circulant_ ? circulant_->normal(f) : f;
}

Image apply_forward(const ForwardModel& model, const Image& f) {
  return BoundForwardModel(model, f.width(), f.height()).apply(f);
}

Image apply_adjoint(const ForwardModel& model, const Image& g) {
  return BoundForwardModel(model, g.width(), g.height()).adjoint(g);
}

Image wiener_deblur(const Image& g, const BlurKernel& kernel, double nsr) {
  return CirculantOperator(kernel, g.width(), g.height()).wiener(g, nsr);
}

GradientField grad(const Image& f) {
  GradientField out{Image::zeros_like(f), Image::zeros_like(f)};
  const int w = f.width(), h = f.height();
  for (int c = 0; c < f.channels(); ++c) {
    auto src = f.plane(c);
    if (w > 1)
      out.dx.plane(c).leftCols(w - 1) = src.rightCols(w - 1) - src.leftCols(w - 1);
    if (h > 1)
      out.dy.plane(c).topRows(h - 1) = src.bottomRows(h - 1) - src.topRows(h - 1);
  }
  return out;
}

GradientField central_grad(const Image& f) {
  GradientField out{Image::zeros_like(f), Image::zeros_like(f)};
  const int w = f.width(), h = f.height();
  for (int c = 0; c < f.channels(); ++c) {
    auto src = f.plane(c);
    auto dx = out.dx.plane(c);
    auto dy = out.dy.plane(c);
    for (int x = 0; x < w; ++x)
      dx.col(x) = (src.col(std::min(x + 1, w - 1)) - src.col(std::max(x - 1, 0))) / 2;
    for (int y = 0; y < h; ++y)
      dy.row(y) = (src.row(std::min(y + 1, h - 1)) - src.row(std::max(y - 1, 0))) / 2;
  }
  return out;
}

Image div(const GradientField& field) {
  require(field.dx.same_shape(field.dy), ErrorKind::shape,
          "gradient components differ in shape");
  Image out = Image::zeros_like(field.dx);
  const int w = out.width(), h = out.height();
  for (int c = 0; c < out.channels(); ++c) {
    auto px = field.dx.plane(c);
    auto py = field.dy.plane(c);
    auto d = out.plane(c);
    if (w > 1) {
      d.leftCols(w - 1) += px.leftCols(w - 1);
      d.rightCols(w - 1) -= px.leftCols(w - 1);
    }
    if (h > 1) {
      d.topRows(h - 1) += py.topRows(h - 1);
      d.bottomRows(h - 1) -= py.topRows(h - 1);
    }
  }
  return out;
}

double dot(const GradientField& a, const GradientField& b) {
  return dot(a.dx, b.dx) + dot(a.dy, b.dy);
}

double bsnr_sigma(const Image& blurred, double bsnr_db) {
  const double var = sample_variance(blurred);
  require(var > 0, ErrorKind::degenerate_input,
          "BSNR is undefined for a constant blurred image");
  return std::sqrt(var / std::pow(10.0, bsnr_db / 10.0));
}

Image convolve_replicate(const Image& img, const BlurKernel& kernel) {
  Image out = Image::zeros_like(img);
  const int w = img.width(), h = img.height();
  const int rx = kernel.width() / 2, ry = kernel.height() / 2;
  for (int c = 0; c < img.channels(); ++c) {
    auto src = img.plane(c);
    auto dst = out.plane(c);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0;
        for (int dy = -ry; dy <= ry; ++dy) {
          const int sy = std::clamp(y - dy, 0, h - 1);
          for (int dx = -rx; dx <= rx; ++dx) {
            const double k = kernel(dx, dy);
            if (k == 0.0) continue;
            acc += k * src(sy, std::clamp(x - dx, 0, w - 1));
          }
        }
        dst(y, x) = acc;
      }
  }
  return out;
}

}  // namespace nladstv
