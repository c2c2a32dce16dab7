#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace nladstv {

enum class SchattenOrder { one, two, infinity };

/// Closed-form eigendecomposition of the symmetric matrix [[a, b], [b, d]].
/// `major_angle` is the orientation of the eigenvector of `major`.
template <typename Scalar>
struct SymEigen2 {
  Scalar major;
  Scalar minor;
  Scalar major_angle;

  Eigen::Matrix<Scalar, 2, 1> major_vector() const {
    return {std::cos(major_angle), std::sin(major_angle)};
  }
  Eigen::Matrix<Scalar, 2, 1> minor_vector() const {
    return {-std::sin(major_angle), std::cos(major_angle)};
  }
};

template <typename Scalar>
SymEigen2<Scalar> sym_eigen2(Scalar a, Scalar b, Scalar d) {
  const Scalar mean = (a + d) / 2;
  const Scalar radius = std::hypot((a - d) / 2, b);
  return {mean + radius, mean - radius, std::atan2(2 * b, a - d) / 2};
}

/// Singular values of a 2 x k matrix from the eigenvalues of its Gram matrix,
/// with negative round-off clamped to zero. Returned in descending order.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 2, 1> singular_values2(
    const Eigen::MatrixBase<Derived>& m) {
  static_assert(Derived::RowsAtCompileTime == 2 ||
                Derived::RowsAtCompileTime == Eigen::Dynamic);
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, 2, 2> gram = m * m.transpose();
  const auto eig = sym_eigen2(gram(0, 0), gram(0, 1), gram(1, 1));
  return {std::sqrt(std::max(eig.major, Scalar(0))),
          std::sqrt(std::max(eig.minor, Scalar(0)))};
}

template <typename Derived>
typename Derived::Scalar schatten_norm(const Eigen::MatrixBase<Derived>& m,
                                       SchattenOrder p) {
  const auto s = singular_values2(m);
  switch (p) {
    case SchattenOrder::one:
      return s(0) + s(1);
    case SchattenOrder::two:
      return m.norm();
    case SchattenOrder::infinity:
      return s(0);
  }
  return s(0);
}

/// In-place proximal map of lambda * ||.||_{S_p} for a 2 x k block,
/// p in {1, 2}. p = 1 soft-thresholds the singular values and reconstructs
/// through the left singular vectors, X = U diag(shrunk / sigma) U^T Z, so no
/// right factor is formed. Directions with singular value below 1e-14
/// contribute nothing. Follows Eigen's const-ref output idiom so blocks and
/// maps can be passed directly.
template <typename Derived>
void prox_schatten_inplace(const Eigen::MatrixBase<Derived>& block,
                           typename Derived::Scalar lambda, SchattenOrder p) {
  using Scalar = typename Derived::Scalar;
  auto& z = const_cast<Eigen::MatrixBase<Derived>&>(block);
  if (lambda <= 0) return;
  if (p != SchattenOrder::one) {
    const Scalar norm = z.norm();
    if (norm <= lambda)
      z.setZero();
    else
      z *= 1 - lambda / norm;
    return;
  }
  const Eigen::Matrix<Scalar, 2, 2> gram = z * z.transpose();
  const auto eig = sym_eigen2(gram(0, 0), gram(0, 1), gram(1, 1));
  auto gain = [lambda](Scalar eigenvalue) {
    const Scalar sigma = std::sqrt(std::max(eigenvalue, Scalar(0)));
    if (sigma < Scalar(1e-14)) return Scalar(0);
    return std::max(sigma - lambda, Scalar(0)) / sigma;
  };
  const Scalar g1 = gain(eig.major), g2 = gain(eig.minor);
  if (g1 == 0 && g2 == 0) {
    z.setZero();
    return;
  }
  const auto u1 = eig.major_vector();
  const auto u2 = eig.minor_vector();
  const Eigen::Matrix<Scalar, 2, 2> shrink =
      g1 * u1 * u1.transpose() + g2 * u2 * u2.transpose();
  z = (shrink * z).eval();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 2, Eigen::Dynamic> prox_schatten(
    const Eigen::MatrixBase<Derived>& z, typename Derived::Scalar lambda,
    SchattenOrder p) {
  Eigen::Matrix<typename Derived::Scalar, 2, Eigen::Dynamic> out = z;
  prox_schatten_inplace(out, lambda, p);
  return out;
}

}  // namespace nladstv
