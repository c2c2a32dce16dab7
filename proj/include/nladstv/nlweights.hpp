#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "nladstv/image.hpp"

namespace nladstv {

struct Pixel {
  int x = 0;
  int y = 0;
};

struct Offset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// Patch-similarity search settings.
struct PatchConfig {
  int patch_size = 7;    ///< s, odd
  int window_size = 11;  ///< r, odd
  double rho = 1.5;      ///< std of the patch weighting kernel, pixels
  double beta = 0.06;    ///< filtering parameter, intensity units
  int neighbors = 9;     ///< L

  void validate() const;

  /// s=7, r=11, L=9 and beta = 0.6 * noise_sigma.
  static PatchConfig restoration(double noise_sigma);
  /// s=5, r=11, L=13.
  static PatchConfig estimation(double beta);
};

/// For every pixel, `neighbors()` (offset, weight) entries. Targets are
/// resolved by clamping `pixel + offset` to the raster, which is a no-op for
/// patch graphs (their windows are clipped) and a replicate boundary for the
/// content-independent Gaussian graph.
class WeightGraph {
 public:
  struct Entry {
    Offset offset;
    double weight = 0;
  };

  WeightGraph() = default;
  WeightGraph(int width, int height, int neighbors);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int neighbors() const noexcept { return neighbors_; }
  Eigen::Index pixels() const noexcept { return Eigen::Index(width_) * height_; }

  std::span<Entry> at(Eigen::Index pixel) {
    return {entries_.data() + pixel * neighbors_, std::size_t(neighbors_)};
  }
  std::span<const Entry> at(Eigen::Index pixel) const {
    return {entries_.data() + pixel * neighbors_, std::size_t(neighbors_)};
  }

  /// Raster index of the l-th neighbor of `pixel`.
  Eigen::Index target(Eigen::Index pixel, int l) const;

  const std::vector<Entry>& entries() const noexcept { return entries_; }

  friend bool operator==(const WeightGraph& a, const WeightGraph& b);

 private:
  int width_ = 0;
  int height_ = 0;
  int neighbors_ = 0;
  std::vector<Entry> entries_;
};

/// Normalized s x s Gaussian patch kernel with standard deviation rho.
Eigen::ArrayXXd patch_kernel(int patch_size, double rho);

/// Gaussian-weighted squared distance between the s x s patches centered at
/// i and j, with replicate padding at the borders.
double patch_distance(const Image& f, Pixel i, Pixel j, int patch_size, double rho);

/// Keeps, for every pixel, the self entry followed by the L-1 window
/// positions with the smallest patch distance (ties broken by raster order),
/// and weights them by exp(-d / beta^2). `f` must be single-channel.
WeightGraph build_weight_graph(const Image& f, const PatchConfig& cfg);

/// Content-independent local graph: the support x support neighborhood with
/// normalized Gaussian taps as weights. Realizes the semi-local structure
/// tensor within the nonlocal machinery.
WeightGraph gaussian_weight_graph(int width, int height, int support, double sigma);

/// Binary blob: magic "NLWG", u32 version (1), u32 width, height, L, then for
/// each pixel in raster order L records of {i32 dx, i32 dy, f64 weight}, all
/// little-endian.
void write_weight_graph(std::ostream& out, const WeightGraph& graph);
WeightGraph read_weight_graph(std::istream& in);

}  // namespace nladstv
