#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "hemet/eiv_regression.hpp"
#include "hemet/kernels.hpp"
#include "hemet/sample.hpp"

namespace hemet {

/// Compact frequency set on which the test process is evaluated. Points are
/// strictly increasing from lo to hi and include 0 whenever 0 lies in range.
struct FrequencyGrid {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<double> points;

  static FrequencyGrid linspace(double lo, double hi, std::size_t count);

  std::size_t size() const noexcept { return points.size(); }
  std::optional<std::size_t> zero_index() const;
  void validate() const;
};

/// sqrt(n) S_n(xi) over a frequency grid, with the plug-in variance and the
/// fitted mean that produced it.
struct TestProcess {
  FrequencyGrid grid;
  std::vector<std::complex<double>> values;
  double sigma_n_sq = 0.0;
  MeanModel theta;
};

struct TestStatistics {
  double ks = 0.0;
  double cvm = 0.0;
};

/// Which route evaluates the kernel Fourier moments.
/// - analytic: closed forms using derivatives of the kernel transform and
///   the error CF; exact, needs degree <= 1 mean and differentiable CF.
/// - quadrature: windowed frequency-domain quadrature; no CF derivatives,
///   supports mean degree <= 2.
/// - auto_select: analytic for known CFs with degree <= 1 mean, quadrature
///   otherwise (estimated CFs default here).
enum class MomentPath { auto_select, analytic, quadrature };

struct EvalOptions {
  MomentPath path = MomentPath::auto_select;
  QuadratureConfig quad{};
  int n_threads = 1;
  bool check_convergence = true;
};

/// Plug-in variance estimate: (1/n) sum_i integral of
/// (Y_i - g(x))^2 K_b((x - W_i)/b) dx.
double sigma_n_sq(const Sample& sample, const MeanModel& theta, Bandwidth b, const ErrorCF& fe,
                  const KernelSpec& k, const EvalOptions& opts = {});

/// Deconvolved residual-marked empirical process, scaled by sqrt(n):
/// values[j] = sqrt(n) (1/n) sum_i integral of
///   [(Y_i - g(x))^2 - sigma_sq] K_b((x - W_i)/b) e^{i x xi_j} dx.
TestProcess empirical_process(const Sample& sample, const MeanModel& theta, double sigma_sq,
                              Bandwidth b, const ErrorCF& fe, const KernelSpec& k,
                              const FrequencyGrid& grid, const EvalOptions& opts = {});

/// sup over the grid of the complex modulus.
double ks_statistic(const TestProcess& p);
/// Trapezoidal integral of the squared modulus over the grid.
double cvm_statistic(const TestProcess& p);

/// Resolves auto_select into a concrete path for a whole run. Estimated CFs
/// go to the quadrature path; if the truncation window cannot capture the
/// kernel mass (heavily floored CF at small bandwidth) and the analytic
/// derivatives are available on the grid, falls back to the analytic path
/// and sets used_fallback.
struct ResolvedEval {
  EvalOptions opts;
  bool used_fallback = false;
};
ResolvedEval resolve_eval(const MeanModel& theta, Bandwidth b, const ErrorCF& fe,
                          const KernelSpec& k, const FrequencyGrid& grid,
                          const EvalOptions& requested);

inline TestStatistics reduce_statistics(const TestProcess& p) {
  return {ks_statistic(p), cvm_statistic(p)};
}

namespace detail {

/// Truncation window for the generic quadrature path. half_width bounds the
/// kernel argument v = (x - w)/b; mass_fraction is the share of the total
/// scanned |K_b| mass captured inside the window.
struct WindowPlan {
  double half_width = 0.0;
  double mass_fraction = 1.0;
};

WindowPlan plan_window(Bandwidth b, const ErrorCF& fe, const KernelSpec& k,
                       const QuadratureConfig& cfg);

/// Per-frequency scaled kernel moments a_l(xi), l = 0..max_order:
///   a_l(xi) = b^l * b * integral of v^l K_b(v) e^{i b v xi} dv.
/// a_0 always uses the exact closed form ft(b xi)/fe(xi).
struct MomentTable {
  int max_order = 2;
  std::vector<std::array<std::complex<double>, 5>> a;  // one entry per xi
  bool used_quadrature = false;
};

MomentTable make_moment_table(std::span<const double> xis, Bandwidth b, const ErrorCF& fe,
                              const KernelSpec& k, int max_order, const EvalOptions& opts,
                              const WindowPlan* window = nullptr);

MomentPath resolve_path(MomentPath requested, const ErrorCF& fe, int mean_degree);

/// Precomputed quadrature layout for building many moment tables over the
/// same frequency grid with different error CFs (the perturbed-CF bootstrap
/// builds one per replicate). Only the CF values change between replicates,
/// so the kernel transform, Simpson weights and window are fixed here.
struct QuadPlan {
  std::vector<double> xis;
  double bval = 1.0;
  double half_window = 0.0;  // truncation V of the kernel-argument integral
  std::vector<double> tnodes;       // Simpson nodes on the kernel support
  std::vector<double> kft_weight;   // ft(t) * Simpson weight
  std::vector<double> kft_at_bxi;   // ft(b * xi_j)

  /// inv_fe[k] = 1 / fe(tnodes[k] / b); fe_at_xi[j] = fe(xi_j).
  MomentTable fill(std::span<const double> inv_fe, std::span<const double> fe_at_xi,
                   int max_order) const;
};

QuadPlan make_quad_plan(std::span<const double> xis, Bandwidth b, const KernelSpec& k,
                        const QuadratureConfig& cfg, const WindowPlan& window);

/// Cached e^{i w_i xi_j} phases (n rows, grid columns); replicate loops
/// reuse them since neither the data nor the grid changes.
struct PhaseTable {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::complex<double>> phases;
};
PhaseTable make_phase_table(std::span<const double> w, std::span<const double> xis);

/// I_l(s) = integral of v^l e^{i v s} dv over [-V, V] for l = 0..lmax.
void window_integrals(int lmax, double s, double V, std::complex<double>* out);

/// Per-observation process contributions T_i(xi_j) = integral of
/// [(Y_i - g(x))^2 - sigma_sq] K_b((x - W_i)/b) e^{i x xi_j} dx,
/// stored row-major (n rows, grid-size columns). Column tree-sums give
/// n * S_n(xi); the bootstrap reuses rows with multiplier weights.
struct ProcessTerms {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::complex<double>> terms;

  std::complex<double> at(std::size_t i, std::size_t j) const { return terms[i * m + j]; }
};

ProcessTerms process_terms(const Sample& sample, const MeanModel& theta, double sigma_sq,
                           const MomentTable& table, std::span<const double> xis, int n_threads,
                           const PhaseTable* phases = nullptr);

/// Deterministic tree reduction of (1/n) sum_i weight_i * terms(i, :).
std::vector<std::complex<double>> weighted_mean(const ProcessTerms& t,
                                                std::span<const double> weights);
std::vector<std::complex<double>> column_mean(const ProcessTerms& t);

}  // namespace detail

}  // namespace hemet
