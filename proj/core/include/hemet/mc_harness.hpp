#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hemet/bootstrap.hpp"

namespace hemet {

enum class ModelKind { linear1, constant2 };
enum class DgpKind { d0, d1, d2 };
enum class ErrorCase { ordinary_laplace, supersmooth_gaussian };

std::string to_string(ModelKind m);
std::string to_string(DgpKind d);
std::string to_string(ErrorCase c);

/// One simulation design: Y = g(X) + sigma(X) U with X, U standard normal,
/// W = X + eps, and optionally a second contaminated measurement of X.
/// sigma^2(x) is 1, 1 + |cos(pi x)|^2, or 1 + exp|x| for d0/d1/d2; the error
/// is Laplace or Gaussian with variance 1/3 (signal-to-noise 3).
struct DgpSpec {
  ModelKind model = ModelKind::linear1;
  DgpKind dgp = DgpKind::d0;
  std::size_t n = 500;
  ErrorCase error_case = ErrorCase::ordinary_laplace;
  bool with_replicates = false;
};

inline constexpr double kDgpErrorVariance = 1.0 / 3.0;

Sample generate(const DgpSpec& spec, std::uint64_t seed);

double dgp_sigma_sq(DgpKind dgp, double x);
double dgp_mean(ModelKind model, double x);

/// Rule-of-thumb bandwidth: c (5 sigma^4 / n)^(1/27) for ordinary smooth
/// errors, c (4 sigma^2 / log n)^(1/2) for supersmooth ones, with sigma^2
/// the measurement-error variance.
Bandwidth rule_of_thumb_bandwidth(Smoothness cf_case, std::size_t n, double sigma_eps_sq,
                                  double c);

struct StudyCell {
  ModelKind model = ModelKind::linear1;
  ErrorCase error_case = ErrorCase::ordinary_laplace;
  bool known_cf = true;
  DgpKind dgp = DgpKind::d0;
  std::size_t n = 500;
  double c = 1.0;

  std::string key() const;  // canonical string, also the per-cell seed salt
};

struct StudyConfig {
  std::vector<StudyCell> cells;
  std::size_t reps = 500;
  std::size_t B = 199;
  std::vector<double> alphas = {0.05};
  std::uint64_t seed = 1;
  int n_threads = 1;
  FrequencyGrid grid = FrequencyGrid::linspace(-1.0, 1.0, 41);
  double cf_floor = kDefaultCfFloor;
};

struct StudyRow {
  StudyCell cell;
  double alpha = 0.05;
  double ks_rate = 0.0;
  double cvm_rate = 0.0;
  std::size_t reps = 0;
  std::size_t B = 0;
  std::uint64_t seed = 0;
  double runtime_sec = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::vector<std::string> cell_errors;  // "<cell key>: <what>"
};

/// Runs every cell: simulate, fit, test, bootstrap, tabulate rejection
/// rates. A failing cell is recorded in cell_errors and does not abort the
/// study. Same seed, same result, regardless of n_threads.
StudyResult run_study(const StudyConfig& cfg);

/// Per-cell seed: splitmix64(master ^ fnv1a64(cell key)). Cells are
/// independently reproducible from the master seed and their coordinates.
std::uint64_t splitmix_cell_seed(std::uint64_t master, const std::string& cell_key);

/// CSV with the fixed header model,case,dgp,n,c,alpha,stat,rate,reps,B,seed
/// (two rows per study row: stat = ks and stat = cvm).
void write_study_csv(std::ostream& os, const StudyResult& result);
/// Human-readable summary table (includes per-cell runtimes).
void write_study_table(std::ostream& os, const StudyResult& result);

/// Decisions for a single simulated dataset, one entry per alpha; the unit
/// of work inside a cell. One bootstrap pass serves every level.
struct CellDecision {
  bool ks_reject = false;
  bool cvm_reject = false;
};
std::vector<CellDecision> run_cell_once(const StudyCell& cell, const FrequencyGrid& grid,
                                        std::size_t B, std::span<const double> alphas,
                                        double cf_floor, std::uint64_t rep_seed);

}  // namespace hemet
