#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "nladstv/image.hpp"
#include "nladstv/image_io.hpp"
#include "oracles.hpp"

using namespace nladstv;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nladstv_test_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("image field layout is planar and row-major") {
  Image img(3, 2, 2);
  img(2, 1, 1) = 5;
  CHECK(img.size() == 12);
  CHECK(img.data()[6 + 1 * 3 + 2] == 5);
  CHECK(img.plane(1)(1, 2) == 5);
  CHECK_THROWS_AS(Image(0, 2), Error);
  CHECK_THROWS_AS(Image(2, 2, 1, Image::Storage::Zero(3)), Error);
  const auto f = img.cast<float>();
  CHECK(f(2, 1, 1) == 5.0f);
}

TEST_CASE("luminance") {
  std::mt19937_64 rng(1);
  const Image gray = oracle::random_image(5, 4, 1, rng);
  CHECK((luminance(gray).data() == gray.data()).all());

  const Image white(4, 4, 3, 1.0);
  CHECK(luminance(white).data().isApproxToConstant(1.0, 1e-15));

  Image red(4, 4, 3);
  red.channel(0).setOnes();
  const Image y = luminance(red);
  CHECK(y.channels() == 1);
  CHECK(y.data().isApproxToConstant(0.299, 1e-15));

  CHECK_THROWS_AS(luminance(Image(2, 2, 2)), Error);
  try {
    luminance(Image(2, 2, 4));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported_format);
  }
}

TEST_CASE("psnr") {
  const Image ref(8, 8, 3, 0.5);
  CHECK(psnr(ref, ref) == kPsnrCap);

  Image off = ref;
  off.data() += 0.1;
  CHECK(psnr(ref, off) == doctest::Approx(20.0).epsilon(1e-12));
  off.data() = ref.data() - 0.05;
  CHECK(psnr(ref, off) == doctest::Approx(26.0206).epsilon(1e-5));

  SUBCASE("symmetric and decreasing in the error") {
    std::mt19937_64 rng(3);
    const Image a = oracle::random_image(6, 6, 1, rng);
    const Image b = oracle::random_image(6, 6, 1, rng);
    CHECK(psnr(a, b) == psnr(b, a));
    double previous = kPsnrCap;
    for (double e : {0.01, 0.02, 0.05, 0.1, 0.3}) {
      Image t = a;
      t.data() += e;
      const double p = psnr(a, t);
      CHECK(p < previous);
      previous = p;
    }
  }
  CHECK_THROWS_AS(psnr(Image(2, 2), Image(2, 3)), Error);
}

TEST_CASE("gaussian noise") {
  std::mt19937_64 rng(5);
  const Image img = oracle::random_image(256, 256, 1, rng);
  CHECK((add_gaussian_noise(img, 0, {9}).data() == img.data()).all());

  const Image a = add_gaussian_noise(img, 0.1, {42});
  const Image b = add_gaussian_noise(img, 0.1, {42});
  CHECK((a.data() == b.data()).all());
  const Image c = add_gaussian_noise(img, 0.1, {43});
  CHECK((a.data() != c.data()).any());

  Image diff = a;
  diff.data() -= img.data();
  CHECK(std::abs(sample_variance(diff) - 0.01) < 0.05 * 0.01);
  // Not clamped.
  CHECK(a.data().minCoeff() < 0);
  CHECK(a.data().maxCoeff() > 1);

  CHECK_THROWS_AS(add_gaussian_noise(img, -0.1, {1}), Error);
}

TEST_CASE("noise level estimate") {
  const Image flat(128, 128, 1, 0.5);
  const Image noisy = add_gaussian_noise(flat, 0.05, {11});
  CHECK(estimate_noise_sigma(noisy) == doctest::Approx(0.05).epsilon(0.05));
  CHECK(estimate_noise_sigma(flat) == 0.0);
}

TEST_CASE("float-map round trip") {
  std::mt19937_64 rng(7);
  Image img = oracle::random_image(7, 5, 3, rng, -2, 3);
  // Values representable in binary32 survive exactly.
  img.data() = img.data().cast<float>().cast<double>();

  std::stringstream buf;
  write_float_map(buf, img);
  CHECK(buf.str().size() == 16 + 4 * img.size());
  CHECK(buf.str().substr(0, 4) == "TVF1");
  const Image back = read_float_map(buf);
  CHECK(back.same_shape(img));
  CHECK((back.data() == img.data()).all());

  const auto path = scratch_dir("io") / "map.tvf";
  save_image(img, path);
  CHECK((load_image(path).data() == img.data()).all());

  std::stringstream bad("TVF2xxxxxxxxxxxx");
  CHECK_THROWS_AS(read_float_map(bad), Error);
  std::stringstream truncated;
  write_float_map(truncated, img);
  std::stringstream cut(truncated.str().substr(0, 30));
  CHECK_THROWS_AS(read_float_map(cut), Error);
}

TEST_CASE("png quantization") {
  const auto dir = scratch_dir("png");
  Image img(3, 1, 1);
  img.data() << 1.0, 128.0 / 255.0, 0.0;
  save_image(img, dir / "gray.png");
  const Image back = load_image(dir / "gray.png");
  CHECK(back(0, 0) == 1.0);
  CHECK(back(1, 0) == doctest::Approx(0.50196).epsilon(1e-5));
  CHECK(back(1, 0) == 128.0 / 255.0);
  CHECK(back(2, 0) == 0.0);

  SUBCASE("rounding to nearest and clamping") {
    Image t(4, 1, 1);
    t.data() << 0.51 / 255.0, 1.49 / 255.0, -0.3, 1.7;
    save_image(t, dir / "q.png");
    const Image q = load_image(dir / "q.png");
    CHECK(q(0, 0) == 1.0 / 255.0);
    CHECK(q(1, 0) == 1.0 / 255.0);
    CHECK(q(2, 0) == 0.0);
    CHECK(q(3, 0) == 1.0);
  }

  SUBCASE("rgb and 16-bit") {
    std::mt19937_64 rng(9);
    Image rgb = oracle::random_image(6, 4, 3, rng);
    save_image(rgb, dir / "rgb16.png", 16);
    const Image back16 = load_image(dir / "rgb16.png");
    CHECK(back16.channels() == 3);
    CHECK((back16.data() - rgb.data()).abs().maxCoeff() <= 0.5 / 65535.0 + 1e-12);
  }

  CHECK_THROWS_AS(load_image(dir / "missing.png"), Error);
  CHECK_THROWS_AS(save_image(img, dir / "x.jpg"), Error);
  CHECK_THROWS_AS(save_image(img, dir / "x.png", 12), Error);
  std::ofstream(dir / "junk.png") << "not a png";
  CHECK_THROWS_AS(load_image(dir / "junk.png"), Error);
}
