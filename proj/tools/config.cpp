#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace nladstv::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  fail(ErrorKind::configuration, "setting '" + key + "' = '" + value + "': expected " + expected);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

}  // namespace

std::string to_string(Task t) { return t == Task::denoise ? "denoise" : "deblur"; }

std::string to_string(Method m) {
  switch (m) {
    case Method::stv: return "stv";
    case Method::adstv: return "adstv";
    case Method::nlstv: return "nlstv";
    case Method::nladstv: return "nladstv";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (Method m : {Method::stv, Method::adstv, Method::nlstv, Method::nladstv})
    if (to_string(m) == s) return m;
  bad_value("method", s, "one of stv, adstv, nlstv, nladstv");
}

bool is_directional(Method m) { return m == Method::adstv || m == Method::nladstv; }
bool is_nonlocal(Method m) { return m == Method::nlstv || m == Method::nladstv; }

BlurKernel BlurSpec::kernel() const {
  if (kind == "gaussian") return gaussian_kernel(size, sigma);
  if (kind == "motion") return motion_kernel(length, angle);
  fail(ErrorKind::configuration, "unknown blur kind '" + kind + "'");
}

std::string BlurSpec::describe() const {
  std::ostringstream s;
  if (kind == "motion")
    s << "motion" << length << "a" << angle;
  else
    s << "gaussian" << size << "s" << sigma;
  return s.str();
}

ForwardModel ExperimentConfig::model() const {
  return task == Task::denoise ? ForwardModel::identity()
                               : ForwardModel::convolution(blur.kernel());
}

std::string ExperimentConfig::degradation() const {
  std::ostringstream s;
  if (task == Task::denoise)
    s << "sigma=" << sigma;
  else
    s << blur.describe() << "/bsnr" << bsnr;
  return s.str();
}

std::pair<double, double> ExperimentConfig::tau_bounds(Method m, double noise_sigma) const {
  const double base = noise_sigma * noise_sigma / (is_directional(m) ? 4.0 : 1.0);
  return {tau_lo.value_or(base), tau_hi.value_or(100 * base)};
}

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = {
      {"task", "denoise | deblur"},
      {"sigma", "noise standard deviation for denoising"},
      {"bsnr", "blurred signal-to-noise ratio in dB for deblurring"},
      {"blur", "gaussian | motion"},
      {"blur_size", "gaussian kernel support (odd)"},
      {"blur_sigma", "gaussian kernel standard deviation"},
      {"motion_length", "motion kernel length in pixels"},
      {"motion_angle", "motion direction in degrees"},
      {"method", "stv | adstv | nlstv | nladstv"},
      {"tau", "regularization weight"},
      {"alpha_plus", "major scale of the directional methods"},
      {"patch_size", "patch side s (odd)"},
      {"window_size", "search window side r (odd)"},
      {"neighbors", "neighbors kept per pixel L"},
      {"rho", "patch weighting kernel std"},
      {"beta", "patch filtering parameter; 0 picks 0.6 times the noise level"},
      {"mu", "ADMM penalty; 0 picks mu_factor * tau"},
      {"mu_factor", "penalty as a multiple of tau"},
      {"max_iter", "ADMM iteration cap"},
      {"tol", "relative change stopping threshold"},
      {"cg_tol", "inner solve relative residual"},
      {"cg_max", "inner solve iteration cap"},
      {"gamma", "upper bound of the intensity box"},
      {"wiener_nsr", "noise-to-signal ratio of the Wiener prefilter"},
      {"seed", "noise seed"},
      {"input", "input image"},
      {"output", "output image (.png or .tvf)"},
      {"reference", "clean reference image"},
      {"directions", "direction field directory"},
      {"log", "iteration log CSV (default: <output>.log.csv)"},
      {"corpus", "bench: directory of clean PNG images"},
      {"out", "bench: output directory"},
      {"methods", "bench: comma-separated methods"},
      {"sigmas", "bench: comma-separated noise levels (denoise)"},
      {"bsnrs", "bench: comma-separated BSNR values (deblur)"},
      {"tau_points", "bench: grid points"},
      {"tau_refine", "bench: refinement rounds around the best grid point"},
      {"tau_lo", "bench: lower grid bound (default scales with the noise variance)"},
      {"tau_hi", "bench: upper grid bound"},
      {"workers", "bench: concurrent cells"},
  };
  return keys;
}

Settings parse_settings(const std::string& text, const std::string& origin) {
  Settings out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  const auto& keys = config_keys();
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::configuration,
           origin + ":" + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (std::none_of(keys.begin(), keys.end(), [&](const KeyInfo& k) { return k.name == key; }))
      fail(ErrorKind::configuration,
           origin + ":" + std::to_string(number) + ": unknown key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

Settings read_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str(), path.string());
}

ExperimentConfig make_config(const Settings& s) {
  ExperimentConfig c;
  auto get = [&](const char* key) -> const std::string* {
    const auto it = s.find(key);
    return it == s.end() ? nullptr : &it->second;
  };
  auto num = [&](const char* key, double& dst) {
    if (auto v = get(key)) dst = to_double(key, *v);
  };
  auto integer = [&](const char* key, int& dst) {
    if (auto v = get(key)) dst = int(to_integer(key, *v));
  };
  auto path = [&](const char* key, std::filesystem::path& dst) {
    if (auto v = get(key)) dst = *v;
  };

  if (auto v = get("task")) {
    if (*v == "denoise")
      c.task = Task::denoise;
    else if (*v == "deblur")
      c.task = Task::deblur;
    else
      bad_value("task", *v, "denoise or deblur");
  }
  num("sigma", c.sigma);
  num("bsnr", c.bsnr);
  if (auto v = get("blur")) c.blur.kind = *v;
  integer("blur_size", c.blur.size);
  num("blur_sigma", c.blur.sigma);
  integer("motion_length", c.blur.length);
  num("motion_angle", c.blur.angle);
  if (auto v = get("method")) c.method = parse_method(*v);
  num("tau", c.tau);
  num("alpha_plus", c.alpha_plus);
  integer("patch_size", c.patch.patch_size);
  integer("window_size", c.patch.window_size);
  integer("neighbors", c.patch.neighbors);
  num("rho", c.patch.rho);
  num("beta", c.patch.beta);
  num("mu", c.solver.mu);
  num("mu_factor", c.solver.mu_factor);
  integer("max_iter", c.solver.max_iter);
  num("tol", c.solver.tol);
  num("cg_tol", c.solver.cg_tol);
  integer("cg_max", c.solver.cg_max);
  num("gamma", c.solver.gamma);
  num("wiener_nsr", c.wiener_nsr);
  if (auto v = get("seed")) {
    const long long seed = to_integer("seed", *v);
    if (seed < 0) bad_value("seed", *v, "a nonnegative integer");
    c.seed = std::uint64_t(seed);
  }
  path("input", c.input);
  path("output", c.output);
  path("reference", c.reference);
  path("directions", c.directions);
  path("log", c.log);
  path("corpus", c.corpus);
  path("out", c.out);
  if (auto v = get("methods")) {
    c.methods.clear();
    for (const auto& m : split_list(*v)) c.methods.push_back(parse_method(m));
  }
  if (auto v = get("sigmas")) {
    c.sigmas.clear();
    for (const auto& x : split_list(*v)) c.sigmas.push_back(to_double("sigmas", x));
  }
  if (auto v = get("bsnrs")) {
    c.bsnrs.clear();
    for (const auto& x : split_list(*v)) c.bsnrs.push_back(to_double("bsnrs", x));
  }
  integer("tau_points", c.tau_points);
  integer("tau_refine", c.tau_refine);
  if (auto v = get("tau_lo")) c.tau_lo = to_double("tau_lo", *v);
  if (auto v = get("tau_hi")) c.tau_hi = to_double("tau_hi", *v);
  integer("workers", c.workers);

  c.solver.tau = c.tau;
  auto check = [](bool ok, const std::string& what) {
    require(ok, ErrorKind::configuration, what);
  };
  check(c.sigma >= 0, "sigma must be nonnegative");
  check(c.alpha_plus > 1, "alpha_plus must exceed 1");
  check(c.blur.kind == "gaussian" || c.blur.kind == "motion", "blur must be gaussian or motion");
  check(c.tau_points >= 1, "tau_points must be positive");
  check(c.tau_refine >= 0, "tau_refine must be nonnegative");
  check(c.workers >= 1, "workers must be positive");
  check(!c.methods.empty(), "methods must not be empty");
  check(c.wiener_nsr >= 0, "wiener_nsr must be nonnegative");
  check(!c.tau_lo || *c.tau_lo > 0, "tau_lo must be positive");
  check(!c.tau_lo || !c.tau_hi || *c.tau_hi >= *c.tau_lo, "tau_hi must not be below tau_lo");
  if (c.task == Task::deblur) {
    check(c.bsnr > 0, "bsnr must be positive");
    c.blur.kernel();
  }
  PatchConfig probe = c.patch;
  if (probe.beta <= 0) probe.beta = 1;
  probe.validate();
  c.solver.validate();
  return c;
}

}  // namespace nladstv::cli
