#include "nladstv/dpe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "nladstv/image_io.hpp"

namespace nladstv {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEigenFloor = 1e-12;

double fold_half_turn(double angle) {
  double a = std::fmod(angle, kPi);
  if (a < 0) a += kPi;
  if (a >= kPi) a -= kPi;
  return a;
}

}  // namespace

double OrientationMaskSet::main_orientation(int bin) {
  return bin * kBinWidthDegrees * kPi / 180.0;
}

TensorField structure_tensor(const Image& gray, int support, double sigma) {
  require(gray.channels() == 1, ErrorKind::unsupported_format,
          "structure tensor needs a single-channel image");
  const GradientField g = central_grad(gray);
  Image xx(gray.width(), gray.height()), xy = xx, yy = xx;
  xx.data() = g.dx.data().square();
  xy.data() = g.dx.data() * g.dy.data();
  yy.data() = g.dy.data().square();
  const BlurKernel k = gaussian_kernel(support, sigma);
  TensorField t;
  t.width = gray.width();
  t.height = gray.height();
  t.t11 = convolve_replicate(xx, k).data();
  t.t12 = convolve_replicate(xy, k).data();
  t.t22 = convolve_replicate(yy, k).data();
  return t;
}

TensorAnalysis eigendecompose(const TensorField& tensor) {
  const int w = tensor.width, h = tensor.height;
  TensorAnalysis out{{Image(w, h), Image(w, h), Image(w, h)}, Image(w, h)};
  for (Eigen::Index i = 0; i < Eigen::Index(w) * h; ++i) {
    const auto eig = sym_eigen2(tensor.t11[i], tensor.t12[i], tensor.t22[i]);
    const double lp = std::max(eig.major, 0.0);
    const double lm = std::clamp(eig.minor, 0.0, lp);
    out.maps.lambda_plus.data()[i] = lp;
    out.maps.lambda_minus.data()[i] = lm;
    if (lp < kEigenFloor) {
      out.maps.theta.data()[i] = 0.0;
      out.linearity.data()[i] = 0.0;
    } else {
      out.maps.theta.data()[i] = fold_half_turn(eig.major_angle + kPi / 2);
      out.linearity.data()[i] = std::clamp((lp - lm) / lp, 0.0, 1.0);
    }
  }
  return out;
}

int orientation_bin(double theta) {
  const double deg = theta * 180.0 / kPi;
  const int bin = static_cast<int>(std::floor((deg + kBinWidthDegrees / 2) / kBinWidthDegrees));
  return ((bin % kOrientationBins) + kOrientationBins) % kOrientationBins;
}

OrientationMaskSet orientation_bins(const Image& theta) {
  OrientationMaskSet set;
  for (auto& m : set.masks) m = MaskPlane::Constant(theta.height(), theta.width(), false);
  auto t = theta.plane(0);
  for (int y = 0; y < theta.height(); ++y)
    for (int x = 0; x < theta.width(); ++x) set.masks[orientation_bin(t(y, x))](y, x) = true;
  return set;
}

OrientationMaskSet orientation_masks(const Image& theta) {
  OrientationMaskSet set = orientation_bins(theta);
  const StructuringElement square = square_element(3);
  for (int m = 0; m < kOrientationBins; ++m) {
    if (!set.masks[m].any()) continue;
    const auto line = line_element(OrientationMaskSet::main_orientation(m), 5);
    set.masks[m] = close(close(set.masks[m], line), square);
  }
  return set;
}

StructuringElement line_element(double angle, int length) {
  const int half = length / 2;
  const double c = std::cos(angle), s = std::sin(angle);
  StructuringElement se;
  for (int k = -half; k <= half; ++k) {
    if (std::abs(c) >= std::abs(s))
      se.push_back({k, static_cast<int>(std::round(k * s / c))});
    else
      se.push_back({static_cast<int>(std::round(k * c / s)), k});
  }
  return se;
}

StructuringElement square_element(int size) {
  StructuringElement se;
  const int h = size / 2;
  for (int dy = -h; dy <= h; ++dy)
    for (int dx = -h; dx <= h; ++dx) se.push_back({dx, dy});
  return se;
}

MaskPlane dilate(const MaskPlane& mask, const StructuringElement& se) {
  const int h = int(mask.rows()), w = int(mask.cols());
  MaskPlane out = MaskPlane::Constant(h, w, false);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (const auto& s : se) {
        const int sx = x - s.dx, sy = y - s.dy;
        if (sx >= 0 && sx < w && sy >= 0 && sy < h && mask(sy, sx)) {
          out(y, x) = true;
          break;
        }
      }
  return out;
}

MaskPlane erode(const MaskPlane& mask, const StructuringElement& se) {
  const int h = int(mask.rows()), w = int(mask.cols());
  MaskPlane out = MaskPlane::Constant(h, w, true);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (const auto& s : se) {
        const int sx = x + s.dx, sy = y + s.dy;
        if (sx >= 0 && sx < w && sy >= 0 && sy < h && !mask(sy, sx)) {
          out(y, x) = false;
          break;
        }
      }
  return out;
}

MaskPlane close(const MaskPlane& mask, const StructuringElement& se) {
  return erode(dilate(mask, se), se);
}

BlurKernel agk_kernel(double sigma, double psi, double beta, int support) {
  require(sigma > 0, ErrorKind::domain, "AGK sigma must be positive");
  require(psi >= 1, ErrorKind::domain, "AGK anisotropy must be at least 1");
  require(support >= 1 && support % 2 == 1, ErrorKind::domain, "AGK support must be odd");
  const int r = support / 2;
  const double c = std::cos(beta), s = std::sin(beta);
  Eigen::ArrayXXd taps(support, support);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const double u = c * dx + s * dy;   // along beta
      const double v = -s * dx + c * dy;  // across beta
      const double q = psi * psi * u * u + v * v / (psi * psi);
      taps(dy + r, dx + r) = std::exp(-q / (2 * sigma * sigma)) / (2 * kPi * sigma * sigma);
    }
  return BlurKernel::normalized(std::move(taps));
}

BlurKernel agk_bank_kernel(double orientation, const AgkConfig& cfg) {
  return agk_kernel(cfg.sigma, cfg.psi, orientation + kPi / 2, cfg.support);
}

Image agk_filter(const Image& img, const OrientationMaskSet& masks, const AgkConfig& cfg) {
  require(img.channels() == 1, ErrorKind::unsupported_format,
          "AGK filtering expects a single-channel map");
  const int w = img.width(), h = img.height();
  Eigen::ArrayXXd sum = Eigen::ArrayXXd::Zero(h, w);
  Eigen::ArrayXXd count = Eigen::ArrayXXd::Zero(h, w);
  for (int m = 0; m < kOrientationBins; ++m) {
    const MaskPlane& mask = masks.masks[m];
    require(mask.rows() == h && mask.cols() == w, ErrorKind::shape,
            "mask size differs from the image");
    if (!mask.any()) continue;
    const Image response =
        convolve_replicate(img, agk_bank_kernel(OrientationMaskSet::main_orientation(m), cfg));
    sum += mask.cast<double>() * response.plane(0);
    count += mask.cast<double>();
  }
  Image out(w, h);
  if ((count == 0).any()) {
    const Image iso = convolve_replicate(img, agk_kernel(cfg.sigma, 1.0, 0.0, cfg.support));
    out.plane(0) = (count > 0).select(sum / count.max(1.0), iso.plane(0));
  } else {
    out.plane(0) = sum / count;
  }
  return out;
}

TensorField nonlocal_structure_tensor(const Image& gray, const WeightGraph& graph) {
  require(gray.channels() == 1, ErrorKind::unsupported_format,
          "structure tensor needs a single-channel image");
  require(graph.width() == gray.width() && graph.height() == gray.height(),
          ErrorKind::shape, "graph and image sizes differ");
  const GradientField g = central_grad(gray);
  TensorField t(gray.width(), gray.height());
  for (Eigen::Index i = 0; i < graph.pixels(); ++i) {
    const auto entries = graph.at(i);
    for (int l = 0; l < graph.neighbors(); ++l) {
      const Eigen::Index j = graph.target(i, l);
      const double wgt = entries[l].weight;
      const double gx = g.dx.data()[j], gy = g.dy.data()[j];
      t.t11[i] += wgt * gx * gx;
      t.t12[i] += wgt * gx * gy;
      t.t22[i] += wgt * gy * gy;
    }
  }
  return t;
}

TensorField nonlocal_structure_tensor(const Image& gray, const PatchConfig& cfg) {
  return nonlocal_structure_tensor(gray, build_weight_graph(gray, cfg));
}

Eigen::ArrayXd alpha_from_linearity(const Eigen::ArrayXd& c, double alpha_plus) {
  require(alpha_plus > 1, ErrorKind::configuration, "alpha_plus must exceed 1");
  const double hi = c.maxCoeff(), lo = c.minCoeff();
  if (!(hi > lo)) return Eigen::ArrayXd::Constant(c.size(), alpha_plus);
  const Eigen::ArrayXd a = (alpha_plus - 1) / (hi - lo) * (hi - c) + 1;
  return a.max(1.0).min(alpha_plus);
}

DpeStages run_dpe(const Image& g, double alpha_plus, const ForwardModel& model,
                  const DpeConfig& cfg) {
  require(alpha_plus > 1, ErrorKind::configuration, "alpha_plus must exceed 1");
  DpeStages st;
  st.input = luminance(model.is_identity() ? g : wiener_deblur(g, model.kernel(), cfg.wiener_nsr));

  st.local = eigendecompose(structure_tensor(st.input, cfg.local_support, cfg.local_sigma));
  st.masks = orientation_masks(st.local.maps.theta);
  st.filtered = agk_filter(st.input, st.masks, cfg.agk);
  st.linearity_agk = agk_filter(st.local.linearity, st.masks, cfg.agk);

  PatchConfig nl = cfg.nonlocal;
  if (cfg.auto_beta)
    nl.beta = std::max(cfg.min_beta, cfg.beta_noise_factor * estimate_noise_sigma(st.input));
  st.nonlocal = eigendecompose(nonlocal_structure_tensor(st.filtered, nl));

  st.linearity = Image(g.width(), g.height());
  st.linearity.data() =
      ((st.linearity_agk.data() + st.nonlocal.linearity.data()) / 2).max(0.0).min(1.0);

  st.directions.width = g.width();
  st.directions.height = g.height();
  st.directions.alpha_plus = alpha_plus;
  st.directions.theta = st.nonlocal.maps.theta.data();
  st.directions.alpha_minor = alpha_from_linearity(st.linearity.data(), alpha_plus);
  st.directions.validate();
  return st;
}

DirectionField estimate_parameters(const Image& g, double alpha_plus,
                                   const ForwardModel& model, const DpeConfig& cfg) {
  return run_dpe(g, alpha_plus, model, cfg).directions;
}

void save_direction_field(const DirectionField& dirs, const std::filesystem::path& dir) {
  dirs.validate();
  std::filesystem::create_directories(dir);
  save_image(Image(dirs.width, dirs.height, 1, dirs.theta), dir / "theta.tvf");
  save_image(Image(dirs.width, dirs.height, 1, dirs.alpha_minor), dir / "alpha.tvf");
  std::ofstream header(dir / "direction.txt");
  if (!header) fail(ErrorKind::io, "cannot write " + (dir / "direction.txt").string());
  header << std::setprecision(17) << "alpha_plus = " << dirs.alpha_plus << "\n"
         << "width = " << dirs.width << "\n"
         << "height = " << dirs.height << "\n";
}

DirectionField load_direction_field(const std::filesystem::path& dir) {
  std::ifstream header(dir / "direction.txt");
  if (!header) fail(ErrorKind::io, "missing " + (dir / "direction.txt").string());
  DirectionField d;
  std::string line;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string key, eq;
    double value;
    if (!(ls >> key >> eq >> value) || eq != "=") continue;
    if (key == "alpha_plus") d.alpha_plus = value;
  }
  const Image theta = load_image(dir / "theta.tvf");
  const Image alpha = load_image(dir / "alpha.tvf");
  require(theta.same_shape(alpha) && theta.channels() == 1, ErrorKind::shape,
          "theta and alpha maps differ in shape");
  d.width = theta.width();
  d.height = theta.height();
  // Float storage can round values onto the interval ends.
  d.theta = theta.data().unaryExpr([](double t) { return fold_half_turn(t); });
  d.alpha_minor = alpha.data().max(1.0).min(d.alpha_plus);
  d.validate();
  return d;
}

}  // namespace nladstv
