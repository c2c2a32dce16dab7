#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nladstv/nladstv.hpp"

namespace nladstv::cli {

enum class Task { denoise, deblur };
enum class Method { stv, adstv, nlstv, nladstv };

std::string to_string(Task t);
std::string to_string(Method m);
Method parse_method(const std::string& s);
bool is_directional(Method m);
bool is_nonlocal(Method m);

struct BlurSpec {
  std::string kind = "gaussian";  ///< gaussian | motion
  int size = 9;
  double sigma = 6.0;
  int length = 19;
  double angle = 45.0;  ///< degrees

  BlurKernel kernel() const;
  std::string describe() const;
};

/// Every knob of an experiment. Settings come from built-in defaults, then a
/// flat `key = value` file, then command-line overrides.
struct ExperimentConfig {
  Task task = Task::denoise;
  double sigma = 0.1;  ///< noise std when denoising
  double bsnr = 30.0;  ///< dB, when deblurring
  BlurSpec blur;

  Method method = Method::nladstv;
  double tau = 0.05;
  double alpha_plus = 4.0;
  PatchConfig patch = PatchConfig::restoration(0);  ///< beta <= 0: automatic
  SolverConfig solver;
  double wiener_nsr = 1e-2;
  std::uint64_t seed = 1;

  std::filesystem::path input, output, reference, directions, log;

  // bench
  std::filesystem::path corpus, out;
  std::vector<Method> methods{Method::stv, Method::adstv, Method::nlstv, Method::nladstv};
  std::vector<double> sigmas{0.1};
  std::vector<double> bsnrs{30.0};
  int tau_points = 8;
  int tau_refine = 2;
  std::optional<double> tau_lo, tau_hi;
  int workers = 1;

  ForwardModel model() const;
  /// "sigma=0.1" or "gaussian9s6/bsnr30".
  std::string degradation() const;
  /// Default grid bounds scale with the noise variance: [s^2, 100 s^2] for
  /// the isotropic methods, a quarter of that for the directional ones
  /// (their Jacobian is up to alpha_plus larger).
  std::pair<double, double> tau_bounds(Method m, double noise_sigma) const;
};

using Settings = std::map<std::string, std::string>;

struct KeyInfo {
  std::string name;
  std::string help;
};

/// The recognized keys, in display order.
const std::vector<KeyInfo>& config_keys();

/// `key = value` lines; blank lines and `#` comments are skipped. Unknown
/// keys and malformed lines are configuration errors.
Settings read_settings(const std::filesystem::path& path);
Settings parse_settings(const std::string& text, const std::string& origin);

ExperimentConfig make_config(const Settings& settings);

}  // namespace nladstv::cli
