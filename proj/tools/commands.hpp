#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace nladstv::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int {
  exit_ok = 0,
  exit_unexpected = 1,
  exit_configuration = 2,
  exit_divergence = 3,
  exit_io = 4,
};

/// Degraded observation and the noise level actually used.
struct Degraded {
  Image g;
  double sigma = 0;
};

/// g = H f + noise, sigma from the config (denoise) or from the BSNR (deblur).
Degraded degrade(const Image& clean, const ExperimentConfig& cfg, std::uint64_t seed);

/// Noise level of the observation as the config describes it: `sigma` when
/// denoising; when deblurring the graph estimates its own level, so the BSNR
/// is not needed here and 0 is returned.
double nominal_sigma(const ExperimentConfig& cfg);

/// Builds the regularizer for `method` on the observation g.
RegularizerMode make_mode(Method method, const Image& g, const ExperimentConfig& cfg,
                          double noise_sigma, const DirectionField* dirs);

/// One line of an evaluation or benchmark table.
struct ReportRow {
  std::string image;
  std::string method;
  std::string degradation;
  double tau = 0;
  double psnr = 0;
  double seconds = 0;
  double iterations = 0;
  bool best = false;
};

/// Sorts by (image, method, degradation), flags the best PSNR per
/// (image, degradation) and appends one "Avg." row per (method, degradation).
std::vector<ReportRow> finish_table(std::vector<ReportRow> rows);
void write_table(std::ostream& out, const std::vector<ReportRow>& rows);

/// Exit code for an exception escaping a command.
int exit_code(const std::exception& e);

/// Entry point shared by the executable and the tests. Returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nladstv::cli
