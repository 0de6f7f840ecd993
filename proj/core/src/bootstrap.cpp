#include "hemet/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "hemet/parallel.hpp"
#include "hemet/rng.hpp"

namespace hemet {

namespace {

// Mammen two-point masses: (1 -/+ sqrt 5)/2 with P(lower) = (sqrt5 + 1)/(2 sqrt5).
constexpr double kSqrt5 = 2.23606797749978969640917366873;
constexpr double kMammenLo = (1.0 - kSqrt5) / 2.0;
constexpr double kMammenHi = (1.0 + kSqrt5) / 2.0;
constexpr double kMammenPLo = (kSqrt5 + 1.0) / (2.0 * kSqrt5);

std::vector<double> draw_with(Rng& rng, MultiplierKind kind, std::size_t n) {
  std::vector<double> v(n);
  if (kind == MultiplierKind::mammen_two_point) {
    for (auto& x : v) x = rng.uniform01() < kMammenPLo ? kMammenLo : kMammenHi;
  } else {
    for (auto& x : v) x = rng.exponential();
  }
  return v;
}

}  // namespace

std::vector<double> draw_multipliers(const MultiplierScheme& scheme, std::size_t n) {
  if (n < 1) throw Error(errc::invalid_argument, "draw_multipliers: n must be >= 1");
  Rng rng(scheme.seed);
  return draw_with(rng, scheme.kind, n);
}

std::vector<std::complex<double>> g_n(const FrequencyGrid& grid, const Sample& sample,
                                      Bandwidth b, const ErrorCF& fe, const KernelSpec& k) {
  sample.validate();
  grid.validate();
  const std::size_t n = sample.size();
  std::vector<std::complex<double>> out(grid.size());
  std::vector<std::complex<double>> col(n);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double xi = grid.points[j];
    const std::complex<double> a0 = detail::moment_a0(xi, b, fe, k);
    for (std::size_t i = 0; i < n; ++i) col[i] = std::polar(1.0, sample.w[i] * xi);
    out[j] = a0 * pairwise_sum(col) / static_cast<double>(n);
  }
  return out;
}

std::vector<std::complex<double>> bootstrap_process_known(
    const Sample& sample, const MeanModel& theta, double sigma_sq, Bandwidth b, const ErrorCF& fe,
    const KernelSpec& k, const FrequencyGrid& grid, std::span<const double> multipliers,
    const EvalOptions& opts) {
  sample.validate();
  grid.validate();
  if (multipliers.size() != sample.size())
    throw Error(errc::length_mismatch, "bootstrap_process_known: multiplier count != n");
  const auto zi = grid.zero_index();
  if (!zi)
    throw Error(errc::invalid_argument, "bootstrap_process_known: grid must contain xi = 0");

  EvalOptions o = opts;
  o.path = detail::resolve_path(opts.path, fe, theta.degree());
  const int order = theta.degree() <= 1 ? 2 : 4;
  const auto table = detail::make_moment_table(grid.points, b, fe, k, order, o);
  const auto terms =
      detail::process_terms(sample, theta, sigma_sq, table, grid.points, o.n_threads);
  auto s_star = detail::weighted_mean(terms, multipliers);
  const auto gn = g_n(grid, sample, b, fe, k);
  const std::complex<double> at_zero = s_star[*zi];
  const double scale = std::sqrt(static_cast<double>(sample.size()));
  for (std::size_t j = 0; j < s_star.size(); ++j)
    s_star[j] = scale * (s_star[j] - gn[j] * at_zero);
  return s_star;
}

std::vector<std::complex<double>> bootstrap_process_unknown(
    const Sample& sample, const MeanModel& theta_hat, Bandwidth b, const ErrorCF& fe_estimated,
    const KernelSpec& k, const FrequencyGrid& grid, std::span<const double> exp_multipliers,
    const EvalOptions& opts) {
  sample.validate();
  grid.validate();
  if (!fe_estimated.is_estimated() || !fe_estimated.replicates())
    throw Error(errc::invalid_argument,
                "bootstrap_process_unknown: needs a replicate-estimated error CF");
  const auto* reps = fe_estimated.replicates();
  if (exp_multipliers.size() != reps->size())
    throw Error(errc::length_mismatch, "bootstrap_process_unknown: multiplier count != n");

  // shared_ptr aliasing of the existing replicate set; no copy
  auto reps_sp = std::shared_ptr<const ReplicateSet>(std::shared_ptr<void>(), reps);
  auto weights = std::make_shared<const std::vector<double>>(exp_multipliers.begin(),
                                                             exp_multipliers.end());
  const ErrorCF fe_star =
      ErrorCF::perturbed(std::move(reps_sp), std::move(weights), fe_estimated.floor_rho());
  for (double xi : grid.points)
    if (fe_star.floored_at(xi))
      throw Error(errc::degenerate_cf,
                  "bootstrap_process_unknown: perturbed CF hits the floor on the grid");

  const double sig_star = sigma_n_sq(sample, theta_hat, b, fe_star, k, opts);
  const auto p = empirical_process(sample, theta_hat, sig_star, b, fe_star, k, grid, opts);
  return p.values;
}

double critical_value(std::span<const double> reps, double alpha) {
  if (reps.empty()) throw Error(errc::insufficient_replicates, "critical_value: no replicates");
  if (!(alpha > 0.0) || !(alpha < 0.5))
    throw Error(errc::invalid_argument, "critical_value: alpha must lie in (0, 0.5)");
  const auto B = static_cast<double>(reps.size());
  auto idx = static_cast<std::size_t>(std::ceil(B * (1.0 - alpha)));
  idx = std::min<std::size_t>(std::max<std::size_t>(idx, 1), reps.size());
  std::vector<double> sorted(reps.begin(), reps.end());
  std::nth_element(sorted.begin(), sorted.begin() + (idx - 1), sorted.end());
  return sorted[idx - 1];
}

double p_value(std::span<const double> reps, double observed) {
  if (reps.empty()) throw Error(errc::insufficient_replicates, "p_value: no replicates");
  std::size_t count = 0;
  for (double r : reps)
    if (r >= observed) ++count;
  return static_cast<double>(count) / static_cast<double>(reps.size());
}

BootstrapOutcome run_bootstrap(const BootstrapConfig& cfg, const Sample& sample, std::size_t B,
                               double alpha, const MultiplierScheme& scheme,
                               const TestStatistics& observed) {
  if (!(alpha > 0.0) || !(alpha < 0.5))
    throw Error(errc::invalid_argument, "run_bootstrap: alpha must lie in (0, 0.5)");
  if (static_cast<double>(B) < 1.0 / alpha - 1.0)
    throw Error(errc::insufficient_replicates,
                "run_bootstrap: B too small for the requested level");
  sample.validate();
  cfg.grid.validate();

  BootstrapOutcome out;
  out.ks_reps.resize(B);
  out.cvm_reps.resize(B);

  const double sqrt_n = std::sqrt(static_cast<double>(sample.size()));
  const bool unknown = cfg.fe.is_estimated();

  if (!unknown) {
    if (scheme.kind != MultiplierKind::mammen_two_point)
      throw Error(errc::invalid_argument,
                  "run_bootstrap: known-CF bootstrap uses mean-zero multipliers");
    const auto zi = cfg.grid.zero_index();
    if (!zi) throw Error(errc::invalid_argument, "run_bootstrap: grid must contain xi = 0");

    EvalOptions o = cfg.eval;
    o.path = detail::resolve_path(cfg.eval.path, cfg.fe, cfg.theta.degree());
    const int order = cfg.theta.degree() <= 1 ? 2 : 4;
    const auto table =
        detail::make_moment_table(cfg.grid.points, cfg.b, cfg.fe, cfg.kernel, order, o);
    const auto terms = detail::process_terms(sample, cfg.theta, cfg.sigma_sq, table,
                                             cfg.grid.points, cfg.eval.n_threads);
    const auto gn = g_n(cfg.grid, sample, cfg.b, cfg.fe, cfg.kernel);

    parallel_for(B, cfg.eval.n_threads, [&](std::size_t r) {
      Rng rng(derive_seed(scheme.seed, r));
      const auto v = draw_with(rng, scheme.kind, sample.size());
      auto s_star = detail::weighted_mean(terms, v);
      const std::complex<double> at_zero = s_star[*zi];
      TestProcess p;
      p.grid = cfg.grid;
      p.values.resize(s_star.size());
      for (std::size_t j = 0; j < s_star.size(); ++j)
        p.values[j] = sqrt_n * (s_star[j] - gn[j] * at_zero);
      out.ks_reps[r] = ks_statistic(p);
      out.cvm_reps[r] = cvm_statistic(p);
    });
  } else {
    if (scheme.kind != MultiplierKind::std_exponential)
      throw Error(errc::invalid_argument,
                  "run_bootstrap: estimated-CF bootstrap uses unit-mean multipliers");
    const auto* reps_set = cfg.fe.replicates();
    if (!reps_set)
      throw Error(errc::invalid_argument, "run_bootstrap: estimated CF without replicates");
    const auto zi = cfg.grid.zero_index();
    if (!zi) throw Error(errc::invalid_argument, "run_bootstrap: grid must contain xi = 0");

    EvalOptions o = cfg.eval;
    o.path = detail::resolve_path(cfg.eval.path, cfg.fe, cfg.theta.degree());
    const int order = cfg.theta.degree() <= 1 ? 2 : 4;
    const std::size_t n = sample.size();
    const std::size_t m = cfg.grid.size();
    const double rho = cfg.fe.floor_rho();
    const auto& deltas = reps_set->deltas();
    const double inv_n_reps = 1.0 / static_cast<double>(deltas.size());

    const auto phases = detail::make_phase_table(sample.w, cfg.grid.points);
    std::vector<std::complex<double>> ecf_w(m);
    {
      std::vector<std::complex<double>> col(n);
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = phases.phases[i * m + j];
        ecf_w[j] = pairwise_sum(col) / static_cast<double>(n);
      }
    }
    // cos(xi_j * delta_d): perturbed CF values on the grid per replicate
    std::vector<double> cos_xi(m * deltas.size());
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t d = 0; d < deltas.size(); ++d)
        cos_xi[j * deltas.size() + d] = std::cos(cfg.grid.points[j] * deltas[d]);

    // reference table at full accuracy; the per-replicate plan is accepted
    // once it reproduces this on the unperturbed CF
    const auto reference =
        detail::make_moment_table(cfg.grid.points, cfg.b, cfg.fe, cfg.kernel, order, o);

    detail::QuadPlan plan;
    std::vector<double> cos_t;  // cos(tnode_k / b * delta_d), plan-node major
    const bool use_plan = o.path == MomentPath::quadrature;
    if (use_plan) {
      const auto window = detail::plan_window(cfg.b, cfg.fe, cfg.kernel, o.quad);
      QuadratureConfig light = o.quad;
      light.nodes_per_unit = std::max(128, o.quad.nodes_per_unit / 8);
      for (;;) {
        plan = detail::make_quad_plan(cfg.grid.points, cfg.b, cfg.kernel, light, window);
        std::vector<double> inv_fe(plan.tnodes.size());
        for (std::size_t k = 0; k < plan.tnodes.size(); ++k)
          inv_fe[k] = 1.0 / cfg.fe(plan.tnodes[k] / cfg.b.value);
        std::vector<double> fe_xi(m);
        for (std::size_t j = 0; j < m; ++j) fe_xi[j] = cfg.fe(cfg.grid.points[j]);
        const auto probe = plan.fill(inv_fe, fe_xi, order);
        bool ok = true;
        for (std::size_t j = 0; j < m && ok; ++j)
          for (int l = 0; l <= order; ++l)
            if (std::abs(probe.a[j][l] - reference.a[j][l]) >
                1e-7 * (1.0 + std::abs(reference.a[j][l]))) {
              ok = false;
              break;
            }
        if (ok) break;
        if (light.nodes_per_unit >= 4 * o.quad.nodes_per_unit)
          throw Error(errc::quadrature_not_converged,
                      "run_bootstrap: replicate quadrature plan failed to validate");
        light.nodes_per_unit *= 2;
      }
      cos_t.resize(plan.tnodes.size() * deltas.size());
      for (std::size_t k = 0; k < plan.tnodes.size(); ++k) {
        const double tb = plan.tnodes[k] / cfg.b.value;
        for (std::size_t d = 0; d < deltas.size(); ++d)
          cos_t[k * deltas.size() + d] = std::cos(tb * deltas[d]);
      }
    }

    std::vector<std::vector<std::complex<double>>> raw(B);
    std::vector<std::size_t> redraw_counts(B, 0);

    parallel_for(B, cfg.eval.n_threads, [&](std::size_t r) {
      std::vector<double> fe_xi(m);
      std::vector<double> inv_fe(use_plan ? plan.tnodes.size() : 0);
      for (int attempt = 0;; ++attempt) {
        if (attempt > cfg.max_redraws)
          throw Error(errc::degenerate_cf,
                      "run_bootstrap: perturbed CF kept hitting the floor after redraws");
        Rng rng(derive_seed(scheme.seed, r * 16 + static_cast<std::size_t>(attempt)));
        const auto v = draw_with(rng, scheme.kind, deltas.size());

        bool floored = false;
        for (std::size_t j = 0; j < m; ++j) {
          double acc = 0.0;
          const double* row = cos_xi.data() + j * deltas.size();
          for (std::size_t d = 0; d < deltas.size(); ++d) acc += v[d] * row[d];
          const double val = std::sqrt(std::abs(acc) * inv_n_reps);
          if (val < rho) {
            floored = true;
            break;
          }
          fe_xi[j] = val;
        }
        if (floored) {
          ++redraw_counts[r];
          continue;
        }

        detail::MomentTable table;
        if (use_plan) {
          for (std::size_t k = 0; k < plan.tnodes.size(); ++k) {
            double acc = 0.0;
            const double* row = cos_t.data() + k * deltas.size();
            for (std::size_t d = 0; d < deltas.size(); ++d) acc += v[d] * row[d];
            inv_fe[k] = 1.0 / std::max(rho, std::sqrt(std::abs(acc) * inv_n_reps));
          }
          table = plan.fill(inv_fe, fe_xi, order);
        } else {
          auto reps_sp = std::shared_ptr<const ReplicateSet>(std::shared_ptr<void>(), reps_set);
          auto weights = std::make_shared<const std::vector<double>>(v);
          const ErrorCF fe_star = ErrorCF::perturbed(std::move(reps_sp), std::move(weights), rho);
          EvalOptions fast = o;
          fast.check_convergence = false;
          fast.n_threads = 1;
          table = detail::make_moment_table(cfg.grid.points, cfg.b, fe_star, cfg.kernel, order,
                                            fast);
        }

        const auto terms0 =
            detail::process_terms(sample, cfg.theta, 0.0, table, cfg.grid.points, 1, &phases);
        auto vals = detail::column_mean(terms0);
        const double sig_star = vals[*zi].real();
        if (!(sig_star >= 0.0))
          throw Error(errc::negative_variance_estimate,
                      "run_bootstrap: perturbed plug-in variance went negative");
        for (std::size_t j = 0; j < m; ++j)
          vals[j] = sqrt_n * (vals[j] - sig_star * table.a[j][0] * ecf_w[j]);
        raw[r] = std::move(vals);
        break;
      }
    });

    for (auto c : redraw_counts) out.redraws += c;

    // center per frequency by the across-replicate mean, then reduce
    std::vector<std::complex<double>> mean(m, {0.0, 0.0});
    for (std::size_t r = 0; r < B; ++r)
      for (std::size_t j = 0; j < m; ++j) mean[j] += raw[r][j];
    for (auto& v : mean) v /= static_cast<double>(B);
    for (std::size_t r = 0; r < B; ++r) {
      TestProcess p;
      p.grid = cfg.grid;
      p.values.resize(m);
      for (std::size_t j = 0; j < m; ++j) p.values[j] = raw[r][j] - mean[j];
      out.ks_reps[r] = ks_statistic(p);
      out.cvm_reps[r] = cvm_statistic(p);
    }
  }

  out.ks_crit = critical_value(out.ks_reps, alpha);
  out.cvm_crit = critical_value(out.cvm_reps, alpha);
  out.ks_pvalue = p_value(out.ks_reps, observed.ks);
  out.cvm_pvalue = p_value(out.cvm_reps, observed.cvm);
  return out;
}

}  // namespace hemet
