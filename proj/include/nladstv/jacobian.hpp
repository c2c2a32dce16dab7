#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "nladstv/image.hpp"
#include "nladstv/nlweights.hpp"
#include "nladstv/spectral2.hpp"

namespace nladstv {

/// Per-pixel orientation theta in [0, pi) and minor scale alpha_minor in
/// [1, alpha_plus], with a global alpha_plus > 1.
struct DirectionField {
  int width = 0;
  int height = 0;
  Eigen::ArrayXd theta;
  Eigen::ArrayXd alpha_minor;
  double alpha_plus = 4.0;

  static DirectionField uniform(int width, int height, double theta,
                                double alpha_minor, double alpha_plus);
  void validate() const;

  /// Lambda(alpha_plus, alpha_minor[i]) * R(-theta[i]).
  Eigen::Matrix2d transform(Eigen::Index pixel) const;
};

/// For each pixel a 2 x (L*C) block. Column c*L + l holds the l-th graph
/// neighbor's (weighted, transformed) gradient of channel c.
template <typename Scalar_>
class JacobianFieldT {
 public:
  using Scalar = Scalar_;
  using Storage = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

  JacobianFieldT() = default;
  JacobianFieldT(int width, int height, int channels, int neighbors)
      : width_(width), height_(height), channels_(channels),
        neighbors_(neighbors),
        data_(Storage::Zero(2, Eigen::Index(width) * height * channels * neighbors)) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  int neighbors() const noexcept { return neighbors_; }
  Eigen::Index pixels() const noexcept { return Eigen::Index(width_) * height_; }
  Eigen::Index block_cols() const noexcept {
    return Eigen::Index(channels_) * neighbors_;
  }

  auto block(Eigen::Index pixel) {
    return data_.middleCols(pixel * block_cols(), block_cols());
  }
  auto block(Eigen::Index pixel) const {
    return data_.middleCols(pixel * block_cols(), block_cols());
  }

  Storage& data() noexcept { return data_; }
  const Storage& data() const noexcept { return data_; }

  bool same_shape(const JacobianFieldT& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_ &&
           channels_ == o.channels_ && neighbors_ == o.neighbors_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  int neighbors_ = 0;
  Storage data_;
};

using JacobianField = JacobianFieldT<double>;

enum class RegularizerKind { nlstv, nladstv };

/// Which Jacobian to build. nlstv is nladstv with the per-point transform
/// replaced by the identity. The local baselines (STV/ADSTV) are the same
/// modes over a gaussian_weight_graph.
struct RegularizerMode {
  RegularizerKind kind = RegularizerKind::nlstv;
  std::shared_ptr<const WeightGraph> graph;
  std::shared_ptr<const DirectionField> directions;

  static RegularizerMode nlstv(WeightGraph graph);
  static RegularizerMode nladstv(WeightGraph graph, DirectionField directions);
};

/// The (directional) nonlocal Jacobian bound to a graph and a channel count,
/// with neighbor targets, sqrt-weights, per-pixel transforms and the reverse
/// adjacency precomputed. The adjoint gathers through the reverse adjacency in
/// a fixed order, so results are deterministic.
class DirectionalJacobian {
 public:
  DirectionalJacobian(const RegularizerMode& mode, int channels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  int neighbors() const noexcept { return neighbors_; }

  JacobianField apply(const Image& f) const;
  void apply(const Image& f, JacobianField& out) const;
  Image adjoint(const JacobianField& x) const;

 private:
  int width_;
  int height_;
  int channels_;
  int neighbors_;
  bool directional_;
  std::vector<Eigen::Matrix2d> transforms_;
  std::vector<Eigen::Index> targets_;
  std::vector<double> sqrt_weights_;
  std::vector<Eigen::Index> reverse_start_;
  std::vector<Eigen::Index> reverse_entries_;
};

JacobianField apply_jacobian(const Image& f, const RegularizerMode& mode);
Image apply_jacobian_adjoint(const JacobianField& x, const RegularizerMode& mode);

/// Sum over pixels of the Schatten norm of each Jacobian block.
double mixed_norm(const JacobianField& x, SchattenOrder p);

/// NLSTV(f) or NLADSTV(f), depending on the mode.
double regularizer_value(const Image& f, const RegularizerMode& mode,
                         SchattenOrder p = SchattenOrder::one);

double dot(const JacobianField& a, const JacobianField& b);

}  // namespace nladstv
