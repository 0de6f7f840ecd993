#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "hemet/test_core.hpp"

namespace hemet {

/// Multiplier law for the wild bootstrap. The two-point law has mean 0 and
/// variance 1 and drives the known-CF bootstrap; the unit-mean exponential
/// perturbs the estimated CF in the unknown case.
enum class MultiplierKind { mammen_two_point, std_exponential };

struct MultiplierScheme {
  MultiplierKind kind = MultiplierKind::mammen_two_point;
  std::uint64_t seed = 0;
};

/// i.i.d. multiplier draws; deterministic given the scheme seed.
std::vector<double> draw_multipliers(const MultiplierScheme& scheme, std::size_t n);

/// G_n(xi) = ft(b xi)/fe(xi) * (1/n) sum_i e^{i W_i xi}: the sample analog
/// of the weight-function expectation removed by the projection.
std::vector<std::complex<double>> g_n(const FrequencyGrid& grid, const Sample& sample,
                                      Bandwidth b, const ErrorCF& fe, const KernelSpec& k);

/// Projection-corrected known-CF bootstrap process:
/// sqrt(n) * [S~*(xi) - G_n(xi) S~*(0)] where S~*(xi) is the
/// multiplier-weighted process with the raw e^{i x xi} weight.
std::vector<std::complex<double>> bootstrap_process_known(
    const Sample& sample, const MeanModel& theta, double sigma_sq, Bandwidth b, const ErrorCF& fe,
    const KernelSpec& k, const FrequencyGrid& grid, std::span<const double> multipliers,
    const EvalOptions& opts = {});

/// Raw (uncentered) unknown-CF bootstrap process sqrt(n) S^*(xi): rebuilds
/// the perturbed CF from the multipliers, recomputes the perturbed plug-in
/// variance, and evaluates the process with the perturbed kernel. Centering
/// across replicates is applied by run_bootstrap.
std::vector<std::complex<double>> bootstrap_process_unknown(
    const Sample& sample, const MeanModel& theta_hat, Bandwidth b, const ErrorCF& fe_estimated,
    const KernelSpec& k, const FrequencyGrid& grid, std::span<const double> exp_multipliers,
    const EvalOptions& opts = {});

struct BootstrapOutcome {
  std::vector<double> ks_reps;
  std::vector<double> cvm_reps;
  double ks_crit = 0.0;
  double cvm_crit = 0.0;
  double ks_pvalue = 1.0;
  double cvm_pvalue = 1.0;
  std::size_t redraws = 0;  // perturbed-CF replicates redrawn after a floor hit
};

/// ceil(B (1 - alpha))-th ascending order statistic of the replicates.
double critical_value(std::span<const double> reps, double alpha);
/// Share of replicates at or above the observed statistic.
double p_value(std::span<const double> reps, double observed);

struct BootstrapConfig {
  MeanModel theta;
  double sigma_sq = 0.0;  // plug-in variance used by the known-CF process
  Bandwidth b{1.0};
  ErrorCF fe = ErrorCF::identity();
  KernelSpec kernel;
  FrequencyGrid grid;
  EvalOptions eval{};
  int max_redraws = 10;
};

/// Runs B multiplier replicates and reduces them to critical values and
/// p-values at the given level. Known-CF configurations use the
/// projection-corrected process with Mammen multipliers; estimated-CF
/// configurations use the perturbed-CF process with exponential multipliers,
/// centered per frequency by the across-replicate mean before reduction.
/// Replicate streams derive from (scheme.seed, replicate index), so results
/// are identical for any worker count.
BootstrapOutcome run_bootstrap(const BootstrapConfig& cfg, const Sample& sample, std::size_t B,
                               double alpha, const MultiplierScheme& scheme,
                               const TestStatistics& observed);

}  // namespace hemet
