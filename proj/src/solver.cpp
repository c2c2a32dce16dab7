#include "nladstv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace nladstv {

void SolverConfig::validate() const {
  require(tau >= 0, ErrorKind::configuration, "tau must be nonnegative");
  require(effective_mu() > 0, ErrorKind::configuration, "mu must be positive");
  require(p == SchattenOrder::one || p == SchattenOrder::two, ErrorKind::configuration,
          "the solver supports Schatten orders 1 and 2");
  require(gamma > 0, ErrorKind::configuration, "gamma must be positive");
  require(max_iter >= 1 && cg_max >= 1, ErrorKind::configuration,
          "iteration caps must be positive");
  require(tol >= 0 && cg_tol > 0, ErrorKind::configuration, "tolerances must be positive");
}

double SolverConfig::effective_mu() const {
  if (mu > 0) return mu;
  // tau = 0 leaves only the data term and the box; any penalty works there.
  return tau > 0 ? mu_factor * tau : 1.0;
}

WeightGraph restoration_graph(const Image& g, const ForwardModel& model, double noise_sigma,
                              PatchConfig patch, double wiener_nsr) {
  require(noise_sigma >= 0, ErrorKind::domain, "noise level must be nonnegative");
  const Image source = luminance(
      model.is_identity() ? g : wiener_deblur(g, model.kernel(), wiener_nsr));
  if (patch.beta <= 0) {
    const double level = model.is_identity() ? noise_sigma : estimate_noise_sigma(source);
    patch.beta = std::max(0.6 * level, 0.01);
  }
  return build_weight_graph(source, patch);
}

Image project_box(const Image& f, double gamma) {
  require(gamma > 0, ErrorKind::domain, "box bound must be positive");
  Image out = f;
  out.data() = out.data().max(0.0).min(gamma);
  return out;
}

CgResult cg_solve(const LinearMap& apply_b, const Image& rhs, const Image& x0,
                  double tol, int max_iter) {
  require(rhs.same_shape(x0), ErrorKind::shape, "cg start and rhs differ in shape");
  CgResult res{x0, 0, 0, false};
  const double rhs_norm = rhs.data().matrix().norm();
  if (rhs_norm == 0) {
    res.x.data().setZero();
    res.converged = true;
    return res;
  }
  Image r = rhs;
  r.data() -= apply_b(res.x).data();
  double rr = r.data().square().sum();
  res.relative_residual = std::sqrt(rr) / rhs_norm;
  if (res.relative_residual <= tol) {
    res.converged = true;
    return res;
  }
  Image p = r;
  for (int k = 1; k <= max_iter; ++k) {
    const Image bp = apply_b(p);
    const double pbp = (p.data() * bp.data()).sum();
    if (!(pbp > 0)) break;
    const double step = rr / pbp;
    res.x.data() += step * p.data();
    r.data() -= step * bp.data();
    const double rr_next = r.data().square().sum();
    res.iterations = k;
    res.relative_residual = std::sqrt(rr_next) / rhs_norm;
    if (res.relative_residual <= tol) {
      res.converged = true;
      break;
    }
    p.data() = r.data() + (rr_next / rr) * p.data();
    rr = rr_next;
  }
  return res;
}

double restoration_objective(const Image& g, const BoundForwardModel& h,
                             const DirectionalJacobian& jacobian, const Image& f,
                             double tau, SchattenOrder p) {
  const double data = 0.5 * (g.data() - h.apply(f).data()).square().sum();
  if (tau == 0) return data;
  return data + tau * mixed_norm(jacobian.apply(f), p);
}

RestoreResult admm_restore(const Image& g, const ForwardModel& model,
                           const RegularizerMode& mode, const SolverConfig& cfg,
                           const RestoreOptions& options) {
  cfg.validate();
  require(g.all_finite(), ErrorKind::domain, "observation contains non-finite values");
  const DirectionalJacobian jac(mode, g.channels());
  require(jac.width() == g.width() && jac.height() == g.height(), ErrorKind::shape,
          "regularizer graph does not match the observation");
  if (options.reference)
    require(options.reference->same_shape(g), ErrorKind::shape,
            "reference and observation differ in shape");

  RestoreResult result;
  if (cfg.tau == 0 && model.is_identity()) {
    // Data term and box alone: the minimizer is the clamped observation.
    result.image = project_box(g, cfg.gamma);
    result.converged = true;
    return result;
  }

  const BoundForwardModel h(model, g.width(), g.height());
  const double mu = cfg.effective_mu();
  const double inv_mu = 1.0 / mu;
  const double threshold = cfg.tau / mu;

  Image htg = h.adjoint(g);
  htg.data() *= inv_mu;

  const LinearMap apply_b = [&](const Image& x) {
    Image out = jac.adjoint(jac.apply(x));
    if (h.is_identity())
      out.data() += (inv_mu + 1.0) * x.data();
    else
      out.data() += inv_mu * h.normal(x).data() + x.data();
    return out;
  };

  Image f = g;
  JacobianField s1(g.width(), g.height(), g.channels(), jac.neighbors());
  Image s2 = Image::zeros_like(g);
  JacobianField jf = jac.apply(f);
  JacobianField z1 = jf;

  int quiet = 0;
  for (int t = 1; t <= cfg.max_iter; ++t) {
    z1.data() = jf.data() + s1.data();
    if (threshold > 0)
      for (Eigen::Index i = 0; i < z1.pixels(); ++i)
        prox_schatten_inplace(z1.block(i), threshold, cfg.p);

    Image z2 = f;
    z2.data() = (f.data() + s2.data()).max(0.0).min(cfg.gamma);

    JacobianField omega1 = z1;
    omega1.data() -= s1.data();
    Image rhs = jac.adjoint(omega1);
    rhs.data() += htg.data() + z2.data() - s2.data();

    const CgResult cg = cg_solve(apply_b, rhs, f, cfg.cg_tol, cfg.cg_max);
    const Image& next = cg.x;
    if (!next.all_finite())
      throw DivergenceError(t, "non-finite iterate at ADMM iteration " + std::to_string(t));

    jac.apply(next, jf);
    s1.data() += jf.data() - z1.data();
    s2.data() += next.data() - z2.data();

    IterationRecord rec;
    rec.iteration = t;
    rec.residual_jacobian = (jf.data() - z1.data()).norm();
    rec.residual_box = (next.data() - z2.data()).matrix().norm();
    const double prev_norm = f.data().matrix().norm();
    const double change = (next.data() - f.data()).matrix().norm();
    rec.relative_change = prev_norm > 0 ? change / prev_norm : change;
    rec.objective = 0.5 * (g.data() - h.apply(next).data()).square().sum() +
                    (cfg.tau > 0 ? cfg.tau * mixed_norm(jf, cfg.p) : 0.0);
    rec.psnr = options.reference ? psnr(*options.reference, project_box(next, cfg.gamma))
                                 : std::numeric_limits<double>::quiet_NaN();
    rec.cg_iterations = cg.iterations;
    rec.cg_residual = cg.relative_residual;
    if (!std::isfinite(rec.objective))
      throw DivergenceError(t, "non-finite objective at ADMM iteration " + std::to_string(t));

    f = next;
    result.history.push_back(rec);
    result.iterations = t;
    if (options.on_iteration) options.on_iteration(rec);
    // A warm-started inner solve can take zero steps and leave f untouched
    // while the splitting variables still move.
    quiet = rec.relative_change < cfg.tol ? quiet + 1 : 0;
    if (quiet >= 2) {
      result.converged = true;
      break;
    }
  }
  result.image = project_box(f, cfg.gamma);
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<IterationRecord>& history) {
  out << "iteration,objective,residual_jacobian,residual_box,relative_change,psnr,"
         "cg_iterations,cg_residual\n";
  out << std::setprecision(10);
  for (const auto& r : history) {
    out << r.iteration << ',' << r.objective << ',' << r.residual_jacobian << ','
        << r.residual_box << ',' << r.relative_change << ',';
    if (!std::isnan(r.psnr)) out << r.psnr;
    out << ',' << r.cg_iterations << ',' << r.cg_residual << '\n';
  }
}

std::vector<TauTrial> search_tau(double lo, double hi, int points, int refine,
                                 const std::function<double(double)>& score) {
  require(lo > 0 && hi >= lo && points >= 1 && refine >= 0, ErrorKind::configuration,
          "tau search needs 0 < lo <= hi, points >= 1 and refine >= 0");
  std::vector<TauTrial> trials;
  for (int k = 0; k < points; ++k) {
    const double tau = points == 1 ? lo : lo * std::pow(hi / lo, double(k) / (points - 1));
    trials.push_back({tau, score(tau)});
  }
  double step = points == 1 ? 1.0 : std::pow(hi / lo, 1.0 / (points - 1));
  for (int r = 0; r < refine && step > 1; ++r) {
    step = std::sqrt(step);
    const double center = best_trial(trials).tau;
    for (double tau : {center / step, center * step})
      if (tau >= lo * (1 - 1e-12) && tau <= hi * (1 + 1e-12)) trials.push_back({tau, score(tau)});
  }
  return trials;
}

const TauTrial& best_trial(const std::vector<TauTrial>& trials) {
  require(!trials.empty(), ErrorKind::configuration, "no tau trials");
  return *std::max_element(trials.begin(), trials.end(),
                           [](const TauTrial& a, const TauTrial& b) { return a.score < b.score; });
}

}  // namespace nladstv
