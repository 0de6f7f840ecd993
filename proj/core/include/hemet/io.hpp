#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "hemet/mc_harness.hpp"

namespace hemet {

struct ColumnSpec {
  std::string y = "y";
  std::string w = "w";
  std::optional<std::string> w_rep;
};

/// Reads a CSV with a header row. Cells must parse as finite decimals;
/// offending cells are reported with their row number.
Sample load_sample_csv(const std::filesystem::path& path, const ColumnSpec& cols);

/// Writes y,w[,w_rep] with round-trip-exact formatting.
void save_sample_csv(const std::filesystem::path& path, const Sample& sample,
                     const ColumnSpec& cols = {});

/// Parsed --error specification.
struct ErrorSpecConfig {
  enum class Kind { known_laplace, known_gaussian, unknown } kind = Kind::unknown;
  double variance = 0.0;  // for the known kinds

  /// Accepts known:laplace:var=V, known:gaussian:var=V, known:gaussian:sd=S,
  /// unknown.
  static ErrorSpecConfig parse(const std::string& text);
};

struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t count = 41;

  /// Parses "lo:hi:count"; count must be odd and >= 5.
  static GridSpec parse(const std::string& text);
  FrequencyGrid build() const { return FrequencyGrid::linspace(lo, hi, count); }
};

struct RunConfig {
  std::filesystem::path data;
  ColumnSpec columns;
  ErrorSpecConfig error;
  MeanFamily mean = MeanFamily::linear;
  std::optional<double> bandwidth;    // explicit b
  double bandwidth_c = 1.0;           // rule-of-thumb constant otherwise
  GridSpec grid;
  std::size_t B = 199;
  std::vector<double> alphas = {0.05};
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> out;
  int n_threads = 1;
  double cf_floor = kDefaultCfFloor;

  void validate() const;
};

struct AlphaRow {
  double alpha = 0.0;
  double ks_crit = 0.0;
  double cvm_crit = 0.0;
  bool ks_reject = false;
  bool cvm_reject = false;
};

struct TestReport {
  TestStatistics observed;
  double ks_pvalue = 1.0;
  double cvm_pvalue = 1.0;
  std::vector<AlphaRow> by_alpha;
  double sigma_n_sq = 0.0;
  MeanModel theta;
  double bandwidth = 0.0;
  double sigma_eps_sq = 0.0;
  GridSpec grid;
  std::size_t n = 0;
  std::size_t B = 0;
  std::size_t bootstrap_redraws = 0;
  bool used_analytic_fallback = false;
  std::string error_spec;
  double elapsed_sec = 0.0;  // console diagnostics only; never written to files
};

/// Full pipeline: load, estimate the error variance if unknown, fit the
/// mean, pick the bandwidth, compute the process and statistics, bootstrap
/// critical values. Deterministic given (config, seed). When config.out is
/// set, writes the text report there and a flat key=value twin next to it
/// (suffix .kv), both atomically.
TestReport cmd_run(const RunConfig& config);

std::string format_report(const TestReport& r);
std::string format_report_kv(const TestReport& r);

struct SimulateConfig {
  StudyConfig study;
  std::optional<std::filesystem::path> out;
};

/// Thin wrapper over run_study; writes the CSV atomically when out is set.
StudyResult cmd_simulate(const SimulateConfig& config);

struct KernelDumpConfig {
  enum class Curve { kft, cf, decon } curve = Curve::kft;
  std::optional<ErrorSpecConfig> error;  // cf and decon need one
  std::optional<double> sigma_eps_sq;    // unknown-error curves are not dumpable
  double bandwidth = 1.0;                // decon only
  double lo = -2.0;
  double hi = 2.0;
  std::size_t count = 401;
  std::optional<std::filesystem::path> out;
};

/// Two-column (x, value) dump of the kernel transform, an error CF, or the
/// deconvolution kernel, for external plotting.
std::string cmd_kernel(const KernelDumpConfig& config);

/// Writes content to path via a temporary file and rename, so failures
/// never leave partial output behind.
void atomic_write(const std::filesystem::path& path, const std::string& content);

}  // namespace hemet
