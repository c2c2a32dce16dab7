#pragma once

#include <array>
#include <filesystem>

#include "nladstv/image.hpp"
#include "nladstv/jacobian.hpp"
#include "nladstv/linops.hpp"
#include "nladstv/nlweights.hpp"

namespace nladstv {

/// Per-pixel symmetric 2x2 tensors [[t11, t12], [t12, t22]].
struct TensorField {
  int width = 0;
  int height = 0;
  Eigen::ArrayXd t11;
  Eigen::ArrayXd t12;
  Eigen::ArrayXd t22;

  TensorField() = default;
  TensorField(int w, int h)
      : width(w), height(h),
        t11(Eigen::ArrayXd::Zero(Eigen::Index(w) * h)),
        t12(Eigen::ArrayXd::Zero(Eigen::Index(w) * h)),
        t22(Eigen::ArrayXd::Zero(Eigen::Index(w) * h)) {}
};

/// lambda_plus >= lambda_minus >= 0 and theta (orientation of the
/// lambda_minus eigenvector, i.e. along edges) in [0, pi).
struct EigenMaps {
  Image lambda_plus;
  Image lambda_minus;
  Image theta;
};

struct TensorAnalysis {
  EigenMaps maps;
  Image linearity;  ///< (lambda_plus - lambda_minus) / lambda_plus, in [0, 1]
};

using MaskPlane = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kOrientationBins = 12;
inline constexpr double kBinWidthDegrees = 15.0;

/// One binary mask per main orientation m * 15 degrees.
struct OrientationMaskSet {
  std::array<MaskPlane, kOrientationBins> masks;

  static double main_orientation(int bin);  ///< radians
};

/// Outer products of central-difference gradients smoothed by a Gaussian
/// (replicate boundary).
TensorField structure_tensor(const Image& gray, int support = 9, double sigma = 1.5);

/// Closed-form eigenanalysis. Where lambda_plus < 1e-12 the linearity and
/// orientation are both set to 0.
TensorAnalysis eigendecompose(const TensorField& tensor);

/// Bin index whose half-open interval [-7.5, 7.5) degrees around m * 15
/// contains theta (mod 180 degrees).
int orientation_bin(double theta);

/// The disjoint binning of theta, before morphology.
OrientationMaskSet orientation_bins(const Image& theta);

/// Binning followed, per mask, by a closing with the 5-pixel line at the
/// mask's main orientation and then by a closing with the 3x3 square.
OrientationMaskSet orientation_masks(const Image& theta);

using StructuringElement = std::vector<Offset>;

/// Digital line of `length` pixels through the origin: one pixel per step
/// along the dominant axis, the other coordinate rounded.
StructuringElement line_element(double angle, int length = 5);
StructuringElement square_element(int size = 3);

/// Dilation treats outside pixels as background, erosion as foreground, so
/// closing never removes pixels.
MaskPlane dilate(const MaskPlane& mask, const StructuringElement& se);
MaskPlane erode(const MaskPlane& mask, const StructuringElement& se);
MaskPlane close(const MaskPlane& mask, const StructuringElement& se);

/// Samples the anisotropic Gaussian
///   exp(-x^T R(beta) diag(psi^2, psi^-2) R(beta)^T x / (2 sigma^2))
/// on the support grid and normalizes the taps to unit sum. The kernel is
/// narrow along beta and elongated across it.
BlurKernel agk_kernel(double sigma, double psi, double beta, int support);

struct AgkConfig {
  double sigma = 0.75;
  double psi = 4.0;
  int support = 13;  ///< smallest odd support >= 6 sigma psi + 1
};

/// Kernel of the filter bank for a main orientation: elongated along it.
BlurKernel agk_bank_kernel(double orientation, const AgkConfig& cfg = {});

/// Filters `img` with every bank kernel and, at each pixel, averages the
/// responses whose masks contain it. Uncovered pixels get the isotropic
/// (psi = 1) response.
Image agk_filter(const Image& img, const OrientationMaskSet& masks,
                 const AgkConfig& cfg = {});

/// Sum over graph neighbors of w(i, j) g[j] g[j]^T, g the central-difference
/// gradient.
TensorField nonlocal_structure_tensor(const Image& gray, const WeightGraph& graph);
TensorField nonlocal_structure_tensor(const Image& gray, const PatchConfig& cfg);

/// Inverse affine map of the linearity onto [1, alpha_plus]: max(c) -> 1,
/// min(c) -> alpha_plus. A flat map gives alpha_plus everywhere.
Eigen::ArrayXd alpha_from_linearity(const Eigen::ArrayXd& c, double alpha_plus);

struct DpeConfig {
  int local_support = 9;
  double local_sigma = 1.5;
  AgkConfig agk;
  PatchConfig nonlocal = PatchConfig::estimation(0.05);
  /// When set, the nonlocal beta is beta_noise_factor times the noise level
  /// estimated on the input luminance (floored at min_beta).
  bool auto_beta = true;
  double beta_noise_factor = 1.0;
  double min_beta = 0.02;
  double wiener_nsr = 1e-2;
};

/// Every intermediate map of the estimation pipeline.
struct DpeStages {
  Image input;          ///< luminance of g (or of its Wiener restoration)
  TensorAnalysis local;
  OrientationMaskSet masks;
  Image filtered;       ///< AGK-filtered input
  Image linearity_agk;
  TensorAnalysis nonlocal;
  Image linearity;      ///< (c_agk + c_nl) / 2
  DirectionField directions;
};

DpeStages run_dpe(const Image& g, double alpha_plus, const ForwardModel& model,
                  const DpeConfig& cfg = {});

DirectionField estimate_parameters(const Image& g, double alpha_plus,
                                   const ForwardModel& model,
                                   const DpeConfig& cfg = {});

/// Writes theta.tvf, alpha.tvf and direction.txt (holding alpha_plus).
void save_direction_field(const DirectionField& dirs, const std::filesystem::path& dir);
DirectionField load_direction_field(const std::filesystem::path& dir);

}  // namespace nladstv
