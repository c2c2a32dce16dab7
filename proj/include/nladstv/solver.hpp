#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "nladstv/image.hpp"
#include "nladstv/jacobian.hpp"
#include "nladstv/linops.hpp"

namespace nladstv {

struct SolverConfig {
  double tau = 0.05;   ///< regularization weight
  double mu = 0.0;     ///< ADMM penalty; <= 0 selects mu_factor * tau
  double mu_factor = 10.0;
  SchattenOrder p = SchattenOrder::one;
  double gamma = 1.0;  ///< box upper bound
  int max_iter = 200;
  /// Stop once the relative change ||f+ - f|| / ||f|| stays below tol for
  /// two consecutive iterations.
  double tol = 1e-5;
  double cg_tol = 1e-7;
  int cg_max = 100;

  void validate() const;
  double effective_mu() const;
};

/// One row of the progress log.
struct IterationRecord {
  int iteration = 0;
  double objective = 0;
  double residual_jacobian = 0;  ///< ||J f - z1||
  double residual_box = 0;       ///< ||f - z2||
  double relative_change = 0;
  double psnr = 0;               ///< NaN without a reference
  int cg_iterations = 0;
  double cg_residual = 0;
};

struct RestoreOptions {
  const Image* reference = nullptr;
  std::function<void(const IterationRecord&)> on_iteration;
};

struct RestoreResult {
  Image image;        ///< final iterate projected onto [0, gamma]
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> history;
};

struct CgResult {
  Image x;
  int iterations = 0;
  double relative_residual = 0;
  bool converged = false;
};

using LinearMap = std::function<Image(const Image&)>;

/// Patch graph for restoring `g`. Denoising builds it on the luminance of g,
/// deblurring on the luminance of the Wiener restoration. A nonpositive
/// `patch.beta` selects 0.6 times the noise level, floored at 0.01; under a
/// blur that level is estimated on the Wiener output, which amplifies noise.
WeightGraph restoration_graph(const Image& g, const ForwardModel& model, double noise_sigma,
                              PatchConfig patch = PatchConfig::restoration(0),
                              double wiener_nsr = 1e-2);

/// Element-wise clamp onto [0, gamma].
Image project_box(const Image& f, double gamma);

/// Conjugate gradients for a symmetric positive definite `apply_b`, started
/// from `x0`. Stops at ||B x - rhs|| <= tol ||rhs|| or after max_iter steps;
/// hitting the cap is reported, not thrown.
CgResult cg_solve(const LinearMap& apply_b, const Image& rhs, const Image& x0,
                  double tol, int max_iter);

/// 0.5 ||g - H f||^2 + tau ||J f||_{1,p}.
double restoration_objective(const Image& g, const BoundForwardModel& h,
                             const DirectionalJacobian& jacobian, const Image& f,
                             double tau, SchattenOrder p);

/// ADMM for min 0.5 ||g - H f||^2 + tau ||J f||_{1,p} + indicator_[0,gamma](f),
/// splitting z1 = J f and z2 = f, starting from f = g and zero multipliers.
/// The Jacobian (hence the weight graph) is fixed for the whole run. Throws
/// DivergenceError on a non-finite iterate.
RestoreResult admm_restore(const Image& g, const ForwardModel& model,
                           const RegularizerMode& mode, const SolverConfig& cfg,
                           const RestoreOptions& options = {});

struct TauTrial {
  double tau;
  double score;
};

/// Maximizes score(tau) over `points` log-spaced values in [lo, hi], then
/// `refine` times probes the geometric midpoints on either side of the
/// incumbent at half the previous log step, staying inside [lo, hi].
/// Returns every trial in evaluation order.
std::vector<TauTrial> search_tau(double lo, double hi, int points, int refine,
                                 const std::function<double(double)>& score);
const TauTrial& best_trial(const std::vector<TauTrial>& trials);

/// CSV with header
/// iteration,objective,residual_jacobian,residual_box,relative_change,psnr,cg_iterations,cg_residual
void write_history_csv(std::ostream& out, const std::vector<IterationRecord>& history);

}  // namespace nladstv
