#include "nladstv/nlweights.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

#include "nladstv/linops.hpp"

namespace nladstv {
namespace {

constexpr std::array<char, 4> kGraphMagic{'N', 'L', 'W', 'G'};
constexpr std::uint32_t kGraphVersion = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bits.begin(), bits.end());
  out.write(reinterpret_cast<const char*>(bits.data()), bits.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bits{};
  in.read(reinterpret_cast<char*>(bits.data()), bits.size());
  if (!in) fail(ErrorKind::io, "truncated weight graph");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace

void PatchConfig::validate() const {
  require(patch_size >= 1 && patch_size % 2 == 1, ErrorKind::configuration,
          "patch size must be odd and positive");
  require(window_size >= 1 && window_size % 2 == 1, ErrorKind::configuration,
          "search window must be odd and positive");
  require(patch_size <= window_size, ErrorKind::configuration,
          "patch size must not exceed the search window");
  require(rho > 0 && beta > 0, ErrorKind::configuration,
          "rho and beta must be positive");
  require(neighbors >= 1 && neighbors <= window_size * window_size,
          ErrorKind::configuration, "neighbor count must be in [1, r^2]");
}

PatchConfig PatchConfig::restoration(double noise_sigma) {
  PatchConfig cfg;
  cfg.beta = 0.6 * noise_sigma;
  return cfg;
}

PatchConfig PatchConfig::estimation(double beta) {
  PatchConfig cfg;
  cfg.patch_size = 5;
  cfg.rho = 1.0;
  cfg.neighbors = 13;
  cfg.beta = beta;
  return cfg;
}

WeightGraph::WeightGraph(int width, int height, int neighbors)
    : width_(width), height_(height), neighbors_(neighbors),
      entries_(std::size_t(width) * height * neighbors) {
  require(width >= 1 && height >= 1 && neighbors >= 1, ErrorKind::shape,
          "weight graph dimensions must be positive");
}

Eigen::Index WeightGraph::target(Eigen::Index pixel, int l) const {
  const auto& e = entries_[pixel * neighbors_ + l];
  const int x = int(pixel % width_), y = int(pixel / width_);
  const int tx = std::clamp(x + e.offset.dx, 0, width_ - 1);
  const int ty = std::clamp(y + e.offset.dy, 0, height_ - 1);
  return Eigen::Index(ty) * width_ + tx;
}

bool operator==(const WeightGraph& a, const WeightGraph& b) {
  if (a.width_ != b.width_ || a.height_ != b.height_ ||
      a.neighbors_ != b.neighbors_)
    return false;
  for (std::size_t k = 0; k < a.entries_.size(); ++k)
    if (a.entries_[k].offset != b.entries_[k].offset ||
        a.entries_[k].weight != b.entries_[k].weight)
      return false;
  return true;
}

Eigen::ArrayXXd patch_kernel(int patch_size, double rho) {
  return gaussian_kernel(patch_size, rho).taps;
}

double patch_distance(const Image& f, Pixel i, Pixel j, int patch_size,
                      double rho) {
  require(f.channels() == 1, ErrorKind::unsupported_format,
          "patch distance needs a single-channel guide");
  const Eigen::ArrayXXd g = patch_kernel(patch_size, rho);
  const int h = patch_size / 2;
  auto p = f.plane(0);
  auto at = [&](int x, int y) {
    return p(std::clamp(y, 0, f.height() - 1), std::clamp(x, 0, f.width() - 1));
  };
  double d = 0;
  for (int ly = -h; ly <= h; ++ly)
    for (int lx = -h; lx <= h; ++lx) {
      const double diff = at(i.x - lx, i.y - ly) - at(j.x - lx, j.y - ly);
      d += g(ly + h, lx + h) * diff * diff;
    }
  return d;
}

WeightGraph build_weight_graph(const Image& f, const PatchConfig& cfg) {
  cfg.validate();
  require(f.channels() == 1, ErrorKind::unsupported_format,
          "weight graphs are built from a single-channel guide");
  const int w = f.width(), ht = f.height();
  const int half_window = cfg.window_size / 2;
  const int half_patch = cfg.patch_size / 2;
  const int clipped_w = std::min(w, cfg.window_size);
  const int clipped_h = std::min(ht, cfg.window_size);
  require(cfg.neighbors <= clipped_w * clipped_h, ErrorKind::configuration,
          "neighbor count exceeds the clipped search window");

  // Replicate-padded guide so the patch loops need no clamping.
  const int pw = w + 2 * half_patch, ph = ht + 2 * half_patch;
  Eigen::ArrayXXd padded(ph, pw);
  auto src = f.plane(0);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      padded(y, x) = src(std::clamp(y - half_patch, 0, ht - 1),
                         std::clamp(x - half_patch, 0, w - 1));
  const Eigen::ArrayXXd kernel = patch_kernel(cfg.patch_size, cfg.rho);

  struct Candidate {
    double distance;
    Eigen::Index raster;
    Offset offset;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(std::size_t(cfg.window_size) * cfg.window_size);

  WeightGraph graph(w, ht, cfg.neighbors);
  const double inv_beta2 = 1.0 / (cfg.beta * cfg.beta);
  for (int y = 0; y < ht; ++y)
    for (int x = 0; x < w; ++x) {
      candidates.clear();
      const int y0 = std::max(0, y - half_window), y1 = std::min(ht - 1, y + half_window);
      const int x0 = std::max(0, x - half_window), x1 = std::min(w - 1, x + half_window);
      for (int jy = y0; jy <= y1; ++jy)
        for (int jx = x0; jx <= x1; ++jx) {
          if (jx == x && jy == y) continue;
          // Patch at (x, y) in padded coordinates starts at (x, y).
          const auto a = padded.block(y, x, cfg.patch_size, cfg.patch_size);
          const auto b = padded.block(jy, jx, cfg.patch_size, cfg.patch_size);
          const double d = (kernel * (a - b).square()).sum();
          candidates.push_back({d, Eigen::Index(jy) * w + jx, {jx - x, jy - y}});
        }
      const std::size_t keep = std::size_t(cfg.neighbors - 1);
      std::partial_sort(candidates.begin(), candidates.begin() + keep,
                        candidates.end(), [](const Candidate& l, const Candidate& r) {
                          return l.distance < r.distance ||
                                 (l.distance == r.distance && l.raster < r.raster);
                        });
      auto entries = graph.at(Eigen::Index(y) * w + x);
      entries[0] = {{0, 0}, 1.0};
      for (std::size_t k = 0; k < keep; ++k)
        entries[k + 1] = {candidates[k].offset,
                          std::exp(-candidates[k].distance * inv_beta2)};
    }
  return graph;
}

WeightGraph gaussian_weight_graph(int width, int height, int support, double sigma) {
  const BlurKernel k = gaussian_kernel(support, sigma);
  const int r = support / 2;
  WeightGraph graph(width, height, support * support);
  std::vector<WeightGraph::Entry> stencil;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) stencil.push_back({{dx, dy}, k(dx, dy)});
  for (Eigen::Index i = 0; i < graph.pixels(); ++i)
    std::copy(stencil.begin(), stencil.end(), graph.at(i).begin());
  return graph;
}

void write_weight_graph(std::ostream& out, const WeightGraph& graph) {
  out.write(kGraphMagic.data(), kGraphMagic.size());
  put_le<std::uint32_t>(out, kGraphVersion);
  put_le<std::uint32_t>(out, std::uint32_t(graph.width()));
  put_le<std::uint32_t>(out, std::uint32_t(graph.height()));
  put_le<std::uint32_t>(out, std::uint32_t(graph.neighbors()));
  for (const auto& e : graph.entries()) {
    put_le<std::int32_t>(out, e.offset.dx);
    put_le<std::int32_t>(out, e.offset.dy);
    put_le<double>(out, e.weight);
  }
  if (!out) fail(ErrorKind::io, "failed writing weight graph");
}

WeightGraph read_weight_graph(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kGraphMagic)
    fail(ErrorKind::unsupported_format, "not a weight graph blob");
  require(get_le<std::uint32_t>(in) == kGraphVersion,
          ErrorKind::unsupported_format, "unsupported weight graph version");
  const auto w = get_le<std::uint32_t>(in);
  const auto h = get_le<std::uint32_t>(in);
  const auto l = get_le<std::uint32_t>(in);
  require(w >= 1 && h >= 1 && l >= 1 && std::uint64_t(w) * h * l < (1ull << 31),
          ErrorKind::unsupported_format, "invalid weight graph header");
  WeightGraph graph{int(w), int(h), int(l)};
  for (Eigen::Index i = 0; i < graph.pixels(); ++i)
    for (auto& e : graph.at(i)) {
      e.offset.dx = get_le<std::int32_t>(in);
      e.offset.dy = get_le<std::int32_t>(in);
      e.weight = get_le<double>(in);
    }
  return graph;
}

}  // namespace nladstv
