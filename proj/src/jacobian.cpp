#include "nladstv/jacobian.hpp"

#include <cmath>
#include <numbers>

#include "nladstv/linops.hpp"

namespace nladstv {

DirectionField DirectionField::uniform(int width, int height, double theta,
                                       double alpha_minor, double alpha_plus) {
  DirectionField d;
  d.width = width;
  d.height = height;
  d.theta = Eigen::ArrayXd::Constant(Eigen::Index(width) * height, theta);
  d.alpha_minor = Eigen::ArrayXd::Constant(Eigen::Index(width) * height, alpha_minor);
  d.alpha_plus = alpha_plus;
  d.validate();
  return d;
}

void DirectionField::validate() const {
  const Eigen::Index n = Eigen::Index(width) * height;
  require(width >= 1 && height >= 1 && theta.size() == n && alpha_minor.size() == n,
          ErrorKind::shape, "direction field size mismatch");
  require(alpha_plus > 1, ErrorKind::configuration, "alpha_plus must exceed 1");
  require((theta >= 0).all() && (theta < std::numbers::pi).all(), ErrorKind::domain,
          "theta must lie in [0, pi)");
  require((alpha_minor >= 1).all() && (alpha_minor <= alpha_plus).all(),
          ErrorKind::domain, "alpha_minor must lie in [1, alpha_plus]");
}

Eigen::Matrix2d DirectionField::transform(Eigen::Index pixel) const {
  const double c = std::cos(theta[pixel]), s = std::sin(theta[pixel]);
  Eigen::Matrix2d rotate;  // R(-theta)
  rotate << c, s, -s, c;
  return Eigen::Vector2d(alpha_plus, alpha_minor[pixel]).asDiagonal() * rotate;
}

RegularizerMode RegularizerMode::nlstv(WeightGraph graph) {
  return {RegularizerKind::nlstv, std::make_shared<const WeightGraph>(std::move(graph)),
          nullptr};
}

RegularizerMode RegularizerMode::nladstv(WeightGraph graph, DirectionField directions) {
  directions.validate();
  require(directions.width == graph.width() && directions.height == graph.height(),
          ErrorKind::shape, "direction field and graph sizes differ");
  return {RegularizerKind::nladstv,
          std::make_shared<const WeightGraph>(std::move(graph)),
          std::make_shared<const DirectionField>(std::move(directions))};
}

DirectionalJacobian::DirectionalJacobian(const RegularizerMode& mode, int channels)
    : channels_(channels) {
  require(mode.graph != nullptr, ErrorKind::configuration, "regularizer has no graph");
  require(channels >= 1, ErrorKind::shape, "channel count must be positive");
  const WeightGraph& graph = *mode.graph;
  width_ = graph.width();
  height_ = graph.height();
  neighbors_ = graph.neighbors();
  directional_ = mode.kind == RegularizerKind::nladstv;
  const Eigen::Index n = graph.pixels();

  if (directional_) {
    require(mode.directions != nullptr, ErrorKind::configuration,
            "nladstv mode needs a direction field");
    const auto& dirs = *mode.directions;
    require(dirs.width == width_ && dirs.height == height_, ErrorKind::shape,
            "direction field and graph sizes differ");
    transforms_.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) transforms_[j] = dirs.transform(j);
  }

  targets_.resize(n * neighbors_);
  sqrt_weights_.resize(n * neighbors_);
  std::vector<Eigen::Index> counts(n + 1, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto entries = graph.at(i);
    for (int l = 0; l < neighbors_; ++l) {
      const Eigen::Index e = i * neighbors_ + l;
      targets_[e] = graph.target(i, l);
      sqrt_weights_[e] = std::sqrt(entries[l].weight);
      ++counts[targets_[e] + 1];
    }
  }
  reverse_start_.assign(n + 1, 0);
  for (Eigen::Index j = 0; j < n; ++j) reverse_start_[j + 1] = reverse_start_[j] + counts[j + 1];
  reverse_entries_.resize(n * neighbors_);
  std::vector<Eigen::Index> cursor(reverse_start_.begin(), reverse_start_.end() - 1);
  for (Eigen::Index e = 0; e < n * neighbors_; ++e)
    reverse_entries_[cursor[targets_[e]]++] = e;
}

JacobianField DirectionalJacobian::apply(const Image& f) const {
  JacobianField out(width_, height_, channels_, neighbors_);
  apply(f, out);
  return out;
}

void DirectionalJacobian::apply(const Image& f, JacobianField& out) const {
  require(f.width() == width_ && f.height() == height_ && f.channels() == channels_,
          ErrorKind::shape, "image does not match the Jacobian operator");
  if (out.width() != width_ || out.height() != height_ ||
      out.channels() != channels_ || out.neighbors() != neighbors_)
    out = JacobianField(width_, height_, channels_, neighbors_);

  const Eigen::Index n = Eigen::Index(width_) * height_;
  const GradientField g = grad(f);
  // Transformed gradient of every pixel and channel, column c*n + j.
  Eigen::Matrix2Xd transformed(2, n * channels_);
  for (int c = 0; c < channels_; ++c)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Vector2d v(g.dx.data()[c * n + j], g.dy.data()[c * n + j]);
      transformed.col(c * n + j) = directional_ ? (transforms_[j] * v).eval() : v;
    }
  for (Eigen::Index i = 0; i < n; ++i) {
    auto block = out.block(i);
    for (int c = 0; c < channels_; ++c)
      for (int l = 0; l < neighbors_; ++l) {
        const Eigen::Index e = i * neighbors_ + l;
        block.col(c * neighbors_ + l) =
            sqrt_weights_[e] * transformed.col(c * n + targets_[e]);
      }
  }
}

Image DirectionalJacobian::adjoint(const JacobianField& x) const {
  require(x.width() == width_ && x.height() == height_ && x.channels() == channels_ &&
              x.neighbors() == neighbors_,
          ErrorKind::shape, "field does not match the Jacobian operator");
  const Eigen::Index n = Eigen::Index(width_) * height_;
  const Eigen::Index cols = x.block_cols();
  GradientField g{Image(width_, height_, channels_), Image(width_, height_, channels_)};
  for (Eigen::Index j = 0; j < n; ++j)
    for (int c = 0; c < channels_; ++c) {
      Eigen::Vector2d acc = Eigen::Vector2d::Zero();
      for (Eigen::Index k = reverse_start_[j]; k < reverse_start_[j + 1]; ++k) {
        const Eigen::Index e = reverse_entries_[k];
        const Eigen::Index i = e / neighbors_;
        const int l = int(e % neighbors_);
        acc += sqrt_weights_[e] * x.data().col(i * cols + c * neighbors_ + l);
      }
      if (directional_) acc = transforms_[j].transpose() * acc;
      g.dx.data()[c * n + j] = acc.x();
      g.dy.data()[c * n + j] = acc.y();
    }
  Image out = div(g);
  out.data() = -out.data();
  return out;
}

JacobianField apply_jacobian(const Image& f, const RegularizerMode& mode) {
  return DirectionalJacobian(mode, f.channels()).apply(f);
}

Image apply_jacobian_adjoint(const JacobianField& x, const RegularizerMode& mode) {
  return DirectionalJacobian(mode, x.channels()).adjoint(x);
}

double mixed_norm(const JacobianField& x, SchattenOrder p) {
  double total = 0;
  for (Eigen::Index i = 0; i < x.pixels(); ++i) total += schatten_norm(x.block(i), p);
  return total;
}

double regularizer_value(const Image& f, const RegularizerMode& mode, SchattenOrder p) {
  return mixed_norm(apply_jacobian(f, mode), p);
}

double dot(const JacobianField& a, const JacobianField& b) {
  require(a.same_shape(b), ErrorKind::shape, "Jacobian field shapes differ");
  return a.data().cwiseProduct(b.data()).sum();
}

}  // namespace nladstv
