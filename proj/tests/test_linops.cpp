#include <doctest.h>

#include <random>

#include "nladstv/linops.hpp"
#include "oracles.hpp"

using namespace nladstv;

namespace {

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

// Circular convolution by direct summation.
Image circular_convolve(const Image& f, const BlurKernel& k) {
  Image out = Image::zeros_like(f);
  const int w = f.width(), h = f.height();
  for (int c = 0; c < f.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0;
        for (int dy = -k.height() / 2; dy <= k.height() / 2; ++dy)
          for (int dx = -k.width() / 2; dx <= k.width() / 2; ++dx)
            acc += k(dx, dy) * f(((x - dx) % w + w) % w, ((y - dy) % h + h) % h, c);
        out(x, y, c) = acc;
      }
  return out;
}

}  // namespace

TEST_CASE("gaussian kernel") {
  const BlurKernel delta = gaussian_kernel(1, 2.0);
  CHECK(delta.taps.size() == 1);
  CHECK(delta.taps(0, 0) == 1.0);

  const BlurKernel k3 = gaussian_kernel(3, 0.5);
  const Eigen::ArrayXXd expected = oracle::gaussian_taps(3, 0.5);
  CHECK((k3.taps - expected).abs().maxCoeff() < 1e-15);
  // exp(-d^2 / 2 sigma^2) on the 3x3 grid, normalized.
  CHECK(k3(0, 0) == doctest::Approx(0.619347).epsilon(1e-6));
  CHECK(k3(1, 0) == doctest::Approx(0.083819).epsilon(1e-5));
  CHECK(k3(1, 1) == doctest::Approx(0.011344).epsilon(1e-4));

  for (auto [s, sigma] : {std::pair{3, 0.5}, {9, 6.0}, {13, 1.1}, {5, 0.2}})
    CHECK(std::abs(gaussian_kernel(s, sigma).taps.sum() - 1) < 1e-12);

  CHECK_THROWS_AS(gaussian_kernel(4, 1.0), Error);
  CHECK_THROWS_AS(gaussian_kernel(3, 0.0), Error);
}

TEST_CASE("motion kernel") {
  const BlurKernel h = motion_kernel(19, 0);
  CHECK(h.width() == 19);
  CHECK(h.height() == 1);
  CHECK(h.taps.isApproxToConstant(1.0 / 19, 1e-14));

  const BlurKernel v = motion_kernel(19, 90);
  CHECK(v.width() == 1);
  CHECK(v.height() == 19);
  CHECK(v.taps.isApproxToConstant(1.0 / 19, 1e-14));

  for (double angle : {0.0, 17.0, 45.0, 60.0, 90.0, 133.0, 200.0}) {
    const BlurKernel k = motion_kernel(19, angle);
    CHECK(std::abs(k.taps.sum() - 1) < 1e-12);
    CHECK(k.width() % 2 == 1);
    CHECK(k.height() % 2 == 1);
    CHECK(k.taps.minCoeff() >= 0);
  }
  // 45 degrees: symmetric about the diagonal, mass on the main diagonal.
  const BlurKernel d = motion_kernel(9, 45);
  CHECK(d.width() == d.height());
  CHECK((d.taps - d.taps.transpose()).abs().maxCoeff() < 1e-14);
  CHECK(d(2, 2) > d(2, -2));
  CHECK(motion_kernel(1, 30).taps.sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(motion_kernel(0, 0), Error);
}

TEST_CASE("forward models") {
  std::mt19937_64 rng(17);
  const Image f = oracle::random_image(16, 16, 2, rng);

  const ForwardModel id = ForwardModel::identity();
  CHECK((apply_forward(id, f).data() == f.data()).all());
  CHECK((apply_adjoint(id, f).data() == f.data()).all());

  const ForwardModel delta = ForwardModel::convolution(gaussian_kernel(1, 1.0));
  CHECK((apply_forward(delta, f).data() - f.data()).abs().maxCoeff() < 1e-12);

  SUBCASE("periodic convolution matches direct summation") {
    for (const BlurKernel& k : {gaussian_kernel(9, 6.0), motion_kernel(7, 30)}) {
      const Image direct = circular_convolve(f, k);
      const Image fast = apply_forward(ForwardModel::convolution(k), f);
      CHECK((direct.data() - fast.data()).abs().maxCoeff() < 1e-12);
    }
  }

  SUBCASE("adjoint identity") {
    for (const BlurKernel& k :
         {gaussian_kernel(9, 6.0), motion_kernel(19, 45), motion_kernel(5, 10)}) {
      const ForwardModel h = ForwardModel::convolution(k);
      for (int trial = 0; trial < 5; ++trial) {
        const Image x = oracle::random_image(16, 16, 1, rng, -1, 1);
        const Image y = oracle::random_image(16, 16, 1, rng, -1, 1);
        CHECK(relative_gap(dot(apply_forward(h, x), y), dot(x, apply_adjoint(h, y))) < 1e-10);
      }
    }
  }

  SUBCASE("shift invariance") {
    const ForwardModel h = ForwardModel::convolution(motion_kernel(9, 30));
    auto shift = [](const Image& img, int sx, int sy) {
      Image out = Image::zeros_like(img);
      for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < img.height(); ++y)
          for (int x = 0; x < img.width(); ++x)
            out((x + sx) % img.width(), (y + sy) % img.height(), c) = img(x, y, c);
      return out;
    };
    const Image a = apply_forward(h, shift(f, 3, 5));
    const Image b = shift(apply_forward(h, f), 3, 5);
    CHECK((a.data() - b.data()).abs().maxCoeff() < 1e-12);
  }

  SUBCASE("rectangular rasters") {
    const Image r = oracle::random_image(12, 7, 1, rng);
    const BlurKernel k = motion_kernel(5, 60);
    const Image direct = circular_convolve(r, k);
    CHECK((direct.data() - apply_forward(ForwardModel::convolution(k), r).data())
              .abs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("wiener deblurring") {
  std::mt19937_64 rng(19);
  const Image f = oracle::random_image(16, 16, 1, rng);
  const BlurKernel k = gaussian_kernel(3, 0.5);
  const Image g = apply_forward(ForwardModel::convolution(k), f);
  const Image back = wiener_deblur(g, k, 0.0);
  CHECK((back.data() - f.data()).matrix().norm() / f.data().matrix().norm() < 1e-8);

  const BlurKernel delta = gaussian_kernel(1, 1.0);
  CHECK((wiener_deblur(f, delta, 0.0).data() - f.data()).abs().maxCoeff() < 1e-12);
  CHECK((wiener_deblur(f, delta, 1.0).data() - f.data() / 2).abs().maxCoeff() < 1e-12);
}

TEST_CASE("gradient and divergence") {
  const Image flat(9, 7, 2, 0.3);
  const GradientField g0 = grad(flat);
  CHECK(g0.dx.data().isZero());
  CHECK(g0.dy.data().isZero());

  Image ramp(10, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 10; ++x) ramp(x, y) = double(x) / 10;
  const GradientField gr = grad(ramp);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 9; ++x) CHECK(gr.dx(x, y) == doctest::Approx(0.1));
    CHECK(gr.dx(9, y) == 0);
  }
  CHECK(gr.dy.data().isZero());

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Image f = oracle::random_image(12, 12, 1 + trial % 3, rng, -1, 1);
    GradientField x{oracle::random_image(12, 12, 1 + trial % 3, rng, -1, 1),
                    oracle::random_image(12, 12, 1 + trial % 3, rng, -1, 1)};
    CHECK(std::abs(dot(grad(f), x) + dot(f, div(x))) < 1e-12);
  }

  SUBCASE("central differences") {
    const Image f = oracle::random_image(8, 6, 1, rng);
    const GradientField c = central_grad(f);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 8; ++x) {
        const Eigen::Vector2d e = oracle::central_gradient(f, x, y);
        CHECK(c.dx(x, y) == doctest::Approx(e.x()).epsilon(1e-14));
        CHECK(c.dy(x, y) == doctest::Approx(e.y()).epsilon(1e-14));
      }
  }
}

TEST_CASE("bsnr noise level") {
  Image hf(10, 10);
  hf.data().head(50).setConstant(0.3);
  hf.data().tail(50).setConstant(0.7);
  CHECK(sample_variance(hf) == doctest::Approx(0.04));
  CHECK(bsnr_sigma(hf, 20) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(bsnr_sigma(hf, 30) == doctest::Approx(0.006325).epsilon(1e-4));
  CHECK_THROWS_AS(bsnr_sigma(Image(4, 4, 1, 0.5), 30), Error);
}

TEST_CASE("replicate-padded convolution") {
  std::mt19937_64 rng(29);
  const Image f = oracle::random_image(9, 8, 1, rng);
  const BlurKernel k = motion_kernel(5, 30);
  const Image out = convolve_replicate(f, k);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 9; ++x) {
      double acc = 0;
      for (int dy = -k.height() / 2; dy <= k.height() / 2; ++dy)
        for (int dx = -k.width() / 2; dx <= k.width() / 2; ++dx)
          acc += k(dx, dy) * oracle::clamped(f, x - dx, y - dy);
      CHECK(out(x, y) == doctest::Approx(acc).epsilon(1e-13));
    }
  const Image flat(6, 6, 1, 0.4);
  CHECK(convolve_replicate(flat, gaussian_kernel(5, 1.0)).data().isApproxToConstant(0.4, 1e-14));
}

TEST_CASE("kernels as float-maps") {
  const BlurKernel k = motion_kernel(7, 30);
  const BlurKernel back = BlurKernel::from_image(k.as_image());
  CHECK((back.taps - k.taps).abs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(BlurKernel::from_image(Image(2, 3)), Error);
}
