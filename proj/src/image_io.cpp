#include "nladstv/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace nladstv {
namespace {

constexpr std::array<char, 4> kMagic{'T', 'V', 'F', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<unsigned char, 4> b{
      static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
      static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) fail(ErrorKind::io, "truncated float-map header");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
         std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

std::string lower_extension(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(ErrorKind::io, "cannot open " + path.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::io, "libpng initialization failed");
  }
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::io, "unreadable PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  if ((depth != 8 && depth != 16) || (channels != 1 && channels != 3)) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::unsupported_format,
         "unsupported PNG layout in " + path.string());
  }

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  buffer.resize(row_bytes * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(width, height, channels);
  const double scale = depth == 8 ? 1.0 / 255.0 : 1.0 / 65535.0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) {
        const std::size_t k = std::size_t(x) * channels + c;
        double v;
        if (depth == 8) {
          v = rows[y][k];
        } else {
          std::uint16_t s;
          std::memcpy(&s, rows[y] + 2 * k, 2);
          v = s;
        }
        img(x, y, c) = v * scale;
      }
  return img;
}

void save_png(const Image& img, const std::filesystem::path& path, int depth) {
  require(depth == 8 || depth == 16, ErrorKind::unsupported_format,
          "PNG bit depth must be 8 or 16");
  require(img.channels() == 1 || img.channels() == 3,
          ErrorKind::unsupported_format, "PNG output needs 1 or 3 channels");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(ErrorKind::io, "cannot create " + path.string());

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "libpng initialization failed");
  }
  const int channels = img.channels();
  const int bytes = depth / 8;
  const double maxval = depth == 8 ? 255.0 : 65535.0;
  std::vector<unsigned char> buffer(std::size_t(img.pixels()) * channels * bytes);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < channels; ++c) {
        const double v = std::clamp(img(x, y, c), 0.0, 1.0);
        const auto q = static_cast<std::uint16_t>(std::floor(v * maxval + 0.5));
        const std::size_t k =
            (std::size_t(y) * img.width() + x) * channels + c;
        if (bytes == 1) {
          buffer[k] = static_cast<unsigned char>(q);
        } else {
          buffer[2 * k] = static_cast<unsigned char>(q >> 8);
          buffer[2 * k + 1] = static_cast<unsigned char>(q & 0xff);
        }
      }
  std::vector<png_bytep> rows(img.height());
  const std::size_t row_bytes = std::size_t(img.width()) * channels * bytes;
  for (int y = 0; y < img.height(); ++y) rows[y] = buffer.data() + y * row_bytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::io, "failed writing PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_float_map(std::ostream& out, const Image& img) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(img.width()));
  put_u32(out, static_cast<std::uint32_t>(img.height()));
  put_u32(out, static_cast<std::uint32_t>(img.channels()));
  for (double v : img.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) fail(ErrorKind::io, "failed writing float-map");
}

Image read_float_map(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) fail(ErrorKind::unsupported_format, "not a TVF1 float-map");
  const auto w = get_u32(in), h = get_u32(in), c = get_u32(in);
  require(w >= 1 && h >= 1 && c >= 1 && std::uint64_t(w) * h * c < (1ull << 31),
          ErrorKind::unsupported_format, "invalid float-map dimensions");
  Image img{int(w), int(h), int(c)};
  for (auto& v : img.data()) v = std::bit_cast<float>(get_u32(in));
  return img;
}

Image load_image(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".tvf") {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    return read_float_map(in);
  }
  if (ext == ".png") return load_png(path);
  fail(ErrorKind::unsupported_format, "unsupported image extension: " + path.string());
}

void save_image(const Image& img, const std::filesystem::path& path,
                int png_bit_depth) {
  const auto ext = lower_extension(path);
  if (ext == ".tvf") {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot create " + path.string());
    write_float_map(out, img);
    return;
  }
  if (ext == ".png") return save_png(img, path, png_bit_depth);
  fail(ErrorKind::unsupported_format, "unsupported image extension: " + path.string());
}

}  // namespace nladstv
