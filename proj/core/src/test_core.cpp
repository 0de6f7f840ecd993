#include "hemet/test_core.hpp"

#include <algorithm>
#include <cmath>

#include "hemet/parallel.hpp"

namespace hemet {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

FrequencyGrid FrequencyGrid::linspace(double lo, double hi, std::size_t count) {
  if (!(lo < hi)) throw Error(errc::invalid_argument, "FrequencyGrid: lo must be < hi");
  if (count < 2) throw Error(errc::invalid_argument, "FrequencyGrid: need at least 2 points");
  FrequencyGrid g;
  g.lo = lo;
  g.hi = hi;
  g.points.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    g.points[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  g.points.front() = lo;
  g.points.back() = hi;
  // keep 0 on the grid whenever it is in range; the plug-in identity and the
  // bootstrap projection both evaluate the process at xi = 0
  if (lo < 0.0 && hi > 0.0) {
    auto it = std::lower_bound(g.points.begin(), g.points.end(), 0.0);
    if (it == g.points.end() || std::abs(*it) > 1e-12) {
      if (it != g.points.begin() && std::abs(*(it - 1)) <= 1e-12) {
        *(it - 1) = 0.0;
      } else {
        g.points.insert(it, 0.0);
      }
    } else {
      *it = 0.0;
    }
  } else if (lo == 0.0) {
    g.points.front() = 0.0;
  } else if (hi == 0.0) {
    g.points.back() = 0.0;
  }
  g.validate();
  return g;
}

std::optional<std::size_t> FrequencyGrid::zero_index() const {
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i] == 0.0) return i;
  return std::nullopt;
}

void FrequencyGrid::validate() const {
  if (!(lo < hi)) throw Error(errc::invalid_argument, "FrequencyGrid: lo must be < hi");
  if (points.size() < 2 || points.front() != lo || points.back() != hi)
    throw Error(errc::invalid_argument, "FrequencyGrid: endpoints do not match lo/hi");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i] > points[i - 1]))
      throw Error(errc::invalid_argument, "FrequencyGrid: points must be strictly increasing");
  if (lo <= 0.0 && hi >= 0.0 && !zero_index())
    throw Error(errc::invalid_argument, "FrequencyGrid: 0 in range but not a grid point");
}

namespace detail {

MomentPath resolve_path(MomentPath requested, const ErrorCF& fe, int mean_degree) {
  if (requested == MomentPath::analytic) {
    if (mean_degree > 1)
      throw Error(errc::unsupported_order,
                  "analytic moment path supports mean degree <= 1 only");
    return MomentPath::analytic;
  }
  if (requested == MomentPath::quadrature) return MomentPath::quadrature;
  if (fe.is_estimated() || mean_degree > 1) return MomentPath::quadrature;
  return MomentPath::analytic;
}

void window_integrals(int lmax, double s, double V, std::complex<double>* out) {
  const double Vs = V * s;
  if (std::abs(Vs) < 0.5) {
    // Taylor branch: the recursion cancels catastrophically near s = 0
    for (int l = 0; l <= lmax; ++l) {
      std::complex<double> acc{0.0, 0.0};
      std::complex<double> is_pow{1.0, 0.0};  // (i s)^k / k!
      double Vpow = std::pow(V, l + 1);
      for (int k = 0; k <= 14; ++k) {
        if ((l + k) % 2 == 0) acc += is_pow * (2.0 * Vpow / static_cast<double>(l + k + 1));
        is_pow *= std::complex<double>(0.0, s) / static_cast<double>(k + 1);
        Vpow *= V;
      }
      out[l] = acc;
    }
    return;
  }
  // I_0 = 2 sin(Vs)/s; I_l = [V^l e^{iVs} - (-V)^l e^{-iVs}]/(i s) - (l/(i s)) I_{l-1}
  const std::complex<double> eiVs = std::polar(1.0, Vs);
  std::complex<double> cur = 2.0 * std::sin(Vs) / s;
  out[0] = cur;
  double Vpow = 1.0;
  const std::complex<double> inv_is = std::complex<double>(0.0, -1.0) / s;
  for (int j = 1; j <= lmax; ++j) {
    Vpow *= V;
    const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
    cur = inv_is * (Vpow * (eiVs - sgn * std::conj(eiVs)) - static_cast<double>(j) * cur);
    out[j] = cur;
  }
}

namespace {

struct PhiGrid {
  std::vector<double> t;
  std::vector<double> phi;     // ft(t) / fe(t/b)
  std::vector<double> weight;  // Simpson weights including h/3
};

PhiGrid tabulate_phi(Bandwidth b, const ErrorCF& fe, const KernelSpec& k, std::size_t panels) {
  const double c0 = k.support_halfwidth;
  PhiGrid g;
  g.t.resize(panels + 1);
  g.phi.resize(panels + 1);
  g.weight.resize(panels + 1);
  const double h = 2.0 * c0 / static_cast<double>(panels);
  for (std::size_t i = 0; i <= panels; ++i) {
    const double t = -c0 + h * static_cast<double>(i);
    const double denom = fe(t / b.value);
    if (!(std::abs(denom) > 0.0))
      throw Error(errc::degenerate_cf, "moment table: error CF vanishes inside kernel support");
    g.t[i] = t;
    g.phi[i] = k.ft(t) / denom;
    double w = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    g.weight[i] = w * h / 3.0;
  }
  return g;
}

// K_b(v) = (1 / 2 pi b) sum_k weight_k phi_k e^{-i t_k v}; real part only,
// the exact value is real for even phi.
double kernel_value_from_phi(const PhiGrid& g, double bval, double v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < g.t.size(); ++i) acc += g.weight[i] * g.phi[i] * std::cos(g.t[i] * v);
  return acc / (2.0 * kPi * bval);
}

std::array<std::complex<double>, 5> quadrature_row(const PhiGrid& g, double bval, double xi,
                                                   int max_order, double V) {
  std::array<std::complex<double>, 5> out{};
  std::array<std::complex<double>, 5> iw{};
  for (std::size_t i = 0; i < g.t.size(); ++i) {
    window_integrals(max_order, bval * xi - g.t[i], V, iw.data());
    const double c = g.weight[i] * g.phi[i];
    for (int l = 1; l <= max_order; ++l) out[l] += c * iw[l];
  }
  double bpow = 1.0;
  for (int l = 1; l <= max_order; ++l) {
    bpow *= bval;
    out[l] *= bpow / (2.0 * kPi);
  }
  return out;
}

}  // namespace

WindowPlan plan_window(Bandwidth b, const ErrorCF& fe, const KernelSpec& k,
                       const QuadratureConfig& cfg) {
  cfg.validate();
  const std::size_t panels = cfg.panels_for(2.0 * k.support_halfwidth);
  const PhiGrid g = tabulate_phi(b, fe, k, panels);

  const double vmax = 512.0;
  const double step = 0.25;
  double peak = 0.0;
  double total_mass = 0.0;
  std::vector<double> absk;
  absk.reserve(static_cast<std::size_t>(vmax / step) + 1);
  for (double v = 0.0; v <= vmax; v += step) {
    const double a = std::abs(kernel_value_from_phi(g, b.value, v)) +
                     (v > 0.0 ? std::abs(kernel_value_from_phi(g, b.value, -v)) : 0.0);
    absk.push_back(a);
    peak = std::max(peak, a);
    total_mass += a * step;
  }
  // smallest window past which the scanned kernel stays below threshold
  const double thresh = 1e-10 * peak;
  std::size_t last = 0;
  for (std::size_t i = 0; i < absk.size(); ++i)
    if (absk[i] > thresh) last = i;
  double V = std::min(vmax, static_cast<double>(last) * step * 1.25 + 4.0);

  // project the unscanned tail assuming 1/v^2 decay; a floored estimated CF
  // with kink points produces exactly such tails
  double edge = 0.0;
  const std::size_t ne = std::min<std::size_t>(8, absk.size());
  for (std::size_t i = absk.size() - ne; i < absk.size(); ++i) edge += absk[i];
  edge /= static_cast<double>(ne) * 2.0;  // per-side average
  const double projected_tail = 2.0 * edge * vmax;

  double inside = 0.0;
  for (std::size_t i = 0; i < absk.size(); ++i)
    if (static_cast<double>(i) * step <= V) inside += absk[i] * step;
  const double frac = inside / (total_mass + projected_tail);
  if (frac < 1.0 - 1e-6)
    throw Error(errc::quadrature_not_converged,
                "plan_window: truncation window captures too little kernel mass");
  return {V, frac};
}

MomentTable make_moment_table(std::span<const double> xis, Bandwidth b, const ErrorCF& fe,
                              const KernelSpec& k, int max_order, const EvalOptions& opts,
                              const WindowPlan* window) {
  if (max_order < 0 || max_order > 4)
    throw Error(errc::unsupported_order, "make_moment_table: max_order must be in 0..4");
  MomentTable table;
  table.max_order = max_order;
  table.a.resize(xis.size());

  const MomentPath path = opts.path == MomentPath::auto_select
                              ? (fe.is_estimated() ? MomentPath::quadrature : MomentPath::analytic)
                              : opts.path;

  if (path == MomentPath::analytic) {
    if (max_order > 2)
      throw Error(errc::unsupported_order, "analytic moment path supports order <= 2");
    for (std::size_t j = 0; j < xis.size(); ++j) {
      table.a[j][0] = moment_a0(xis[j], b, fe, k);
      if (max_order >= 1) table.a[j][1] = moment_a1(xis[j], b, fe, k);
      if (max_order >= 2) table.a[j][2] = moment_a2(xis[j], b, fe, k);
    }
    return table;
  }

  table.used_quadrature = true;
  WindowPlan local;
  if (!window) {
    local = plan_window(b, fe, k, opts.quad);
    window = &local;
  }
  const double V = window->half_width;
  const std::size_t base_panels = opts.quad.panels_for(2.0 * k.support_halfwidth);

  auto build = [&](std::size_t panels) {
    const PhiGrid g = tabulate_phi(b, fe, k, panels);
    std::vector<std::array<std::complex<double>, 5>> rows(xis.size());
    parallel_for(xis.size(), opts.n_threads, [&](std::size_t j) {
      rows[j] = quadrature_row(g, b.value, xis[j], max_order, V);
    });
    return rows;
  };

  auto rows = build(base_panels * 2);
  if (opts.check_convergence) {
    const auto coarse = build(base_panels);
    for (std::size_t j = 0; j < xis.size(); ++j)
      for (int l = 1; l <= max_order; ++l) {
        const double diff = std::abs(rows[j][l] - coarse[j][l]);
        if (diff > opts.quad.rel_tol * (1.0 + std::abs(rows[j][l])))
          throw Error(errc::quadrature_not_converged,
                      "make_moment_table: node doubling did not converge");
      }
  }
  for (std::size_t j = 0; j < xis.size(); ++j) {
    rows[j][0] = moment_a0(xis[j], b, fe, k);  // exact closed form, no derivatives
    table.a[j] = rows[j];
  }
  return table;
}

QuadPlan make_quad_plan(std::span<const double> xis, Bandwidth b, const KernelSpec& k,
                        const QuadratureConfig& cfg, const WindowPlan& window) {
  cfg.validate();
  QuadPlan plan;
  plan.xis.assign(xis.begin(), xis.end());
  plan.bval = b.value;
  plan.half_window = window.half_width;
  // enough nodes to resolve both the base integrand and the window
  // oscillation exp(i V (b xi - t))
  std::size_t panels = cfg.panels_for(2.0 * k.support_halfwidth);
  const auto osc = static_cast<std::size_t>(16.0 * window.half_width * k.support_halfwidth);
  panels = std::max(panels, osc + (osc % 2));
  const double c0 = k.support_halfwidth;
  const double h = 2.0 * c0 / static_cast<double>(panels);
  plan.tnodes.resize(panels + 1);
  plan.kft_weight.resize(panels + 1);
  for (std::size_t i = 0; i <= panels; ++i) {
    const double t = -c0 + h * static_cast<double>(i);
    plan.tnodes[i] = t;
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    plan.kft_weight[i] = k.ft(t) * w * h / 3.0;
  }
  plan.kft_at_bxi.resize(xis.size());
  for (std::size_t j = 0; j < xis.size(); ++j) plan.kft_at_bxi[j] = k.ft(b.value * xis[j]);
  return plan;
}

MomentTable QuadPlan::fill(std::span<const double> inv_fe, std::span<const double> fe_at_xi,
                           int max_order) const {
  if (inv_fe.size() != tnodes.size())
    throw Error(errc::length_mismatch, "QuadPlan::fill: inv_fe size != node count");
  if (fe_at_xi.size() != xis.size())
    throw Error(errc::length_mismatch, "QuadPlan::fill: fe_at_xi size != grid size");
  if (max_order > 4) throw Error(errc::unsupported_order, "QuadPlan::fill: max_order <= 4");
  MomentTable table;
  table.max_order = max_order;
  table.used_quadrature = true;
  table.a.resize(xis.size());
  std::array<std::complex<double>, 5> iw{};
  for (std::size_t j = 0; j < xis.size(); ++j) {
    std::array<std::complex<double>, 5> row{};
    const double bxi = bval * xis[j];
    for (std::size_t i = 0; i < tnodes.size(); ++i) {
      window_integrals(max_order, bxi - tnodes[i], half_window, iw.data());
      const double c = kft_weight[i] * inv_fe[i];
      for (int l = 1; l <= max_order; ++l) row[l] += c * iw[l];
    }
    double bpow = 1.0;
    for (int l = 1; l <= max_order; ++l) {
      bpow *= bval;
      row[l] *= bpow / (2.0 * kPi);
    }
    row[0] = {kft_at_bxi[j] / fe_at_xi[j], 0.0};
    table.a[j] = row;
  }
  return table;
}

PhaseTable make_phase_table(std::span<const double> w, std::span<const double> xis) {
  PhaseTable t;
  t.n = w.size();
  t.m = xis.size();
  t.phases.resize(t.n * t.m);
  for (std::size_t i = 0; i < t.n; ++i)
    for (std::size_t j = 0; j < t.m; ++j) t.phases[i * t.m + j] = std::polar(1.0, w[i] * xis[j]);
  return t;
}

ProcessTerms process_terms(const Sample& sample, const MeanModel& theta, double sigma_sq,
                           const MomentTable& table, std::span<const double> xis, int n_threads,
                           const PhaseTable* phases) {
  const std::size_t n = sample.size();
  const std::size_t m = xis.size();
  ProcessTerms out;
  out.n = n;
  out.m = m;
  out.terms.resize(n * m);
  if (phases && (phases->n != n || phases->m != m))
    throw Error(errc::length_mismatch, "process_terms: phase table shape mismatch");

  parallel_for(n, n_threads, [&](std::size_t i) {
    const double wi = sample.w[i];
    const auto q = theta.residual_sq_coeffs(sample.y[i]);
    // Taylor coefficients of (y - g(x))^2 - sigma_sq about x = w_i:
    // s_l = sum_{m >= l} q_m C(m, l) w_i^(m-l)
    std::array<double, 5> s{};
    static constexpr double binom[5][5] = {{1, 0, 0, 0, 0},
                                           {1, 1, 0, 0, 0},
                                           {1, 2, 1, 0, 0},
                                           {1, 3, 3, 1, 0},
                                           {1, 4, 6, 4, 1}};
    for (int l = 0; l <= 4; ++l) {
      double acc = 0.0;
      double wpow = 1.0;
      for (int mm = l; mm <= 4; ++mm) {
        acc += q[mm] * binom[mm][l] * wpow;
        wpow *= wi;
      }
      s[l] = acc;
    }
    for (int l = table.max_order + 1; l <= 4; ++l)
      if (s[l] != 0.0)
        throw Error(errc::unsupported_order,
                    "process_terms: moment table order too low for this mean model");
    s[0] -= sigma_sq;
    for (std::size_t j = 0; j < m; ++j) {
      const std::complex<double> phase =
          phases ? phases->phases[i * m + j] : std::polar(1.0, wi * xis[j]);
      std::complex<double> acc{0.0, 0.0};
      for (int l = 0; l <= table.max_order; ++l) acc += s[l] * table.a[j][l];
      out.terms[i * m + j] = phase * acc;
    }
  });
  return out;
}

std::vector<std::complex<double>> weighted_mean(const ProcessTerms& t,
                                                std::span<const double> weights) {
  if (weights.size() != t.n)
    throw Error(errc::length_mismatch, "weighted_mean: weight count != observation count");
  std::vector<std::complex<double>> out(t.m);
  std::vector<std::complex<double>> col(t.n);
  for (std::size_t j = 0; j < t.m; ++j) {
    for (std::size_t i = 0; i < t.n; ++i) col[i] = weights[i] * t.terms[i * t.m + j];
    out[j] = pairwise_sum(col) / static_cast<double>(t.n);
  }
  return out;
}

std::vector<std::complex<double>> column_mean(const ProcessTerms& t) {
  std::vector<std::complex<double>> out(t.m);
  std::vector<std::complex<double>> col(t.n);
  for (std::size_t j = 0; j < t.m; ++j) {
    for (std::size_t i = 0; i < t.n; ++i) col[i] = t.terms[i * t.m + j];
    out[j] = pairwise_sum(col) / static_cast<double>(t.n);
  }
  return out;
}

}  // namespace detail

namespace {

detail::MomentTable table_for(std::span<const double> xis, const MeanModel& theta, Bandwidth b,
                              const ErrorCF& fe, const KernelSpec& k, const EvalOptions& opts) {
  const int deg = theta.degree();
  const int order = deg <= 1 ? 2 : 4;
  EvalOptions o = opts;
  o.path = detail::resolve_path(opts.path, fe, deg);
  return detail::make_moment_table(xis, b, fe, k, order, o);
}

}  // namespace

double sigma_n_sq(const Sample& sample, const MeanModel& theta, Bandwidth b, const ErrorCF& fe,
                  const KernelSpec& k, const EvalOptions& opts) {
  sample.validate();
  const double xi0 = 0.0;
  const auto table = table_for(std::span(&xi0, 1), theta, b, fe, k, opts);
  const auto terms = detail::process_terms(sample, theta, /*sigma_sq=*/0.0, table,
                                           std::span(&xi0, 1), opts.n_threads);
  const std::complex<double> v = detail::column_mean(terms)[0];
  if (std::abs(v.imag()) > 1e-8 * (1.0 + std::abs(v)))
    throw Error(errc::quadrature_not_converged, "sigma_n_sq: imaginary residue too large");
  if (v.real() < 0.0)
    throw Error(errc::negative_variance_estimate,
                "sigma_n_sq: negative variance estimate (bandwidth or CF pathology)");
  return v.real();
}

TestProcess empirical_process(const Sample& sample, const MeanModel& theta, double sigma_sq,
                              Bandwidth b, const ErrorCF& fe, const KernelSpec& k,
                              const FrequencyGrid& grid, const EvalOptions& opts) {
  sample.validate();
  grid.validate();
  const auto table = table_for(grid.points, theta, b, fe, k, opts);
  const auto terms =
      detail::process_terms(sample, theta, sigma_sq, table, grid.points, opts.n_threads);
  auto values = detail::column_mean(terms);
  const double scale = std::sqrt(static_cast<double>(sample.size()));
  for (auto& v : values) v *= scale;
  TestProcess p;
  p.grid = grid;
  p.values = std::move(values);
  p.sigma_n_sq = sigma_sq;
  p.theta = theta;
  return p;
}

ResolvedEval resolve_eval(const MeanModel& theta, Bandwidth b, const ErrorCF& fe,
                          const KernelSpec& k, const FrequencyGrid& grid,
                          const EvalOptions& requested) {
  ResolvedEval r;
  r.opts = requested;
  r.opts.path = detail::resolve_path(requested.path, fe, theta.degree());
  if (r.opts.path != MomentPath::quadrature) return r;
  try {
    detail::plan_window(b, fe, k, r.opts.quad);
  } catch (const Error& e) {
    if (e.code() == errc::quadrature_not_converged && theta.degree() <= 1 &&
        fe.analytic_derivs_ok(grid.points)) {
      r.opts.path = MomentPath::analytic;
      r.used_fallback = true;
      return r;
    }
    throw;
  }
  return r;
}

double ks_statistic(const TestProcess& p) {
  if (p.values.empty()) throw Error(errc::invalid_argument, "ks_statistic: empty process");
  double m = 0.0;
  for (const auto& v : p.values) m = std::max(m, std::abs(v));
  return m;
}

double cvm_statistic(const TestProcess& p) {
  if (p.values.size() < 2 || p.values.size() != p.grid.size())
    throw Error(errc::invalid_argument, "cvm_statistic: need a grid with >= 2 points");
  double acc = 0.0;
  for (std::size_t j = 1; j < p.values.size(); ++j) {
    const double h = p.grid.points[j] - p.grid.points[j - 1];
    const double f0 = std::norm(p.values[j - 1]);
    const double f1 = std::norm(p.values[j]);
    acc += 0.5 * h * (f0 + f1);
  }
  return acc;
}

}  // namespace hemet
