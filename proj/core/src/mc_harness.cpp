#include "hemet/mc_harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "hemet/parallel.hpp"
#include "hemet/rng.hpp"

namespace hemet {

std::string to_string(ModelKind m) { return m == ModelKind::linear1 ? "1" : "2"; }

std::string to_string(DgpKind d) {
  switch (d) {
    case DgpKind::d0: return "0";
    case DgpKind::d1: return "1";
    case DgpKind::d2: return "2";
  }
  return "?";
}

std::string to_string(ErrorCase c) {
  return c == ErrorCase::ordinary_laplace ? "ordinary" : "supersmooth";
}

double dgp_mean(ModelKind model, double x) {
  return model == ModelKind::linear1 ? 1.0 + x : 1.0;
}

double dgp_sigma_sq(DgpKind dgp, double x) {
  switch (dgp) {
    case DgpKind::d0: return 1.0;
    case DgpKind::d1: {
      const double c = std::cos(3.14159265358979323846 * x);
      return 1.0 + c * c;
    }
    case DgpKind::d2: return 1.0 + std::exp(std::abs(x));
  }
  return 1.0;
}

Sample generate(const DgpSpec& spec, std::uint64_t seed) {
  if (spec.n < 50) throw Error(errc::invalid_argument, "generate: n must be >= 50");
  Rng rng(seed);
  const std::size_t n = spec.n;
  std::vector<double> x(n), u(n), eps(n);
  for (auto& v : x) v = rng.normal();
  for (auto& v : u) v = rng.normal();
  const bool laplace = spec.error_case == ErrorCase::ordinary_laplace;
  const double sd = std::sqrt(kDgpErrorVariance);
  for (auto& v : eps) v = laplace ? rng.laplace(kDgpErrorVariance) : sd * rng.normal();

  Sample s;
  s.y.resize(n);
  s.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.y[i] = dgp_mean(spec.model, x[i]) + std::sqrt(dgp_sigma_sq(spec.dgp, x[i])) * u[i];
    s.w[i] = x[i] + eps[i];
  }
  if (spec.with_replicates) {
    std::vector<double> wr(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double er = laplace ? rng.laplace(kDgpErrorVariance) : sd * rng.normal();
      wr[i] = x[i] + er;
    }
    s.w_rep = std::move(wr);
  }
  return s;
}

Bandwidth rule_of_thumb_bandwidth(Smoothness cf_case, std::size_t n, double sigma_eps_sq,
                                  double c) {
  if (n < 2) throw Error(errc::invalid_argument, "rule_of_thumb_bandwidth: n must be >= 2");
  if (!(c > 0.0)) throw Error(errc::invalid_argument, "rule_of_thumb_bandwidth: c must be > 0");
  if (!(sigma_eps_sq > 0.0))
    throw Error(errc::non_positive_variance,
                "rule_of_thumb_bandwidth: error variance must be positive");
  const auto nn = static_cast<double>(n);
  switch (cf_case) {
    case Smoothness::ordinary:
      return Bandwidth(c * std::pow(5.0 * sigma_eps_sq * sigma_eps_sq / nn, 1.0 / 27.0));
    case Smoothness::supersmooth:
      return Bandwidth(c * std::sqrt(4.0 * sigma_eps_sq / std::log(nn)));
    case Smoothness::estimated:
      throw Error(errc::invalid_argument,
                  "rule_of_thumb_bandwidth: pick ordinary or supersmooth for estimated CFs");
  }
  throw Error(errc::invalid_argument, "rule_of_thumb_bandwidth: unknown case");
}

std::string StudyCell::key() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "model=%s;case=%s;known=%d;dgp=%s;n=%zu;c=%g",
                to_string(model).c_str(), to_string(error_case).c_str(), known_cf ? 1 : 0,
                to_string(dgp).c_str(), n, c);
  return buf;
}

std::vector<CellDecision> run_cell_once(const StudyCell& cell, const FrequencyGrid& grid,
                                        std::size_t B, std::span<const double> alphas,
                                        double cf_floor, std::uint64_t rep_seed) {
  DgpSpec spec{cell.model, cell.dgp, cell.n, cell.error_case, !cell.known_cf};
  const Sample sample = generate(spec, rep_seed);
  const KernelSpec kernel = flat_top_kernel();

  ErrorCF fe = ErrorCF::identity();
  double sigma_eps_sq = kDgpErrorVariance;
  if (cell.known_cf) {
    fe = cell.error_case == ErrorCase::ordinary_laplace ? laplace_cf(kDgpErrorVariance)
                                                        : gaussian_cf(kDgpErrorVariance);
  } else {
    auto reps = sample.replicates();
    sigma_eps_sq = sigma_eps_from_replicates(*reps);
    fe = ErrorCF::estimated(std::move(reps), cf_floor);
  }

  const Smoothness rule_case = cell.error_case == ErrorCase::ordinary_laplace
                                   ? Smoothness::ordinary
                                   : Smoothness::supersmooth;
  const Bandwidth b = rule_of_thumb_bandwidth(rule_case, cell.n, sigma_eps_sq, cell.c);

  const MeanFamily family =
      cell.model == ModelKind::linear1 ? MeanFamily::linear : MeanFamily::constant;
  const MeanModel theta = fit_corrected_ls(sample, family, sigma_eps_sq);

  const auto eval = resolve_eval(theta, b, fe, kernel, grid, EvalOptions{});
  const double sig = sigma_n_sq(sample, theta, b, fe, kernel, eval.opts);
  const auto process = empirical_process(sample, theta, sig, b, fe, kernel, grid, eval.opts);
  const TestStatistics observed = reduce_statistics(process);

  MultiplierScheme scheme;
  scheme.kind =
      cell.known_cf ? MultiplierKind::mammen_two_point : MultiplierKind::std_exponential;
  scheme.seed = derive_seed(rep_seed, 1);

  BootstrapConfig bcfg{theta, sig, b, fe, kernel, grid, eval.opts};
  double alpha_min = alphas[0];
  for (double a : alphas) alpha_min = std::min(alpha_min, a);
  const BootstrapOutcome outcome = run_bootstrap(bcfg, sample, B, alpha_min, scheme, observed);

  std::vector<CellDecision> out(alphas.size());
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    const double ks_crit = critical_value(outcome.ks_reps, alphas[a]);
    const double cvm_crit = critical_value(outcome.cvm_reps, alphas[a]);
    out[a] = {observed.ks > ks_crit, observed.cvm > cvm_crit};
  }
  return out;
}

StudyResult run_study(const StudyConfig& cfg) {
  if (cfg.cells.empty()) throw Error(errc::config, "run_study: no cells");
  if (cfg.reps < 1) throw Error(errc::config, "run_study: reps must be >= 1");
  if (cfg.alphas.empty()) throw Error(errc::config, "run_study: no alpha levels");
  cfg.grid.validate();

  StudyResult result;
  for (const auto& cell : cfg.cells) {
    const std::uint64_t cell_seed = splitmix_cell_seed(cfg.seed, cell.key());
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::vector<CellDecision>> decisions(cfg.reps);
    try {
      parallel_for(cfg.reps, cfg.n_threads, [&](std::size_t rep) {
        decisions[rep] = run_cell_once(cell, cfg.grid, cfg.B, cfg.alphas, cfg.cf_floor,
                                       derive_seed(cell_seed, rep));
      });
    } catch (const Error& e) {
      result.cell_errors.push_back(cell.key() + ": " + e.what());
      continue;
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
      std::size_t ks_rejects = 0, cvm_rejects = 0;
      for (const auto& d : decisions) {
        ks_rejects += d[a].ks_reject ? 1 : 0;
        cvm_rejects += d[a].cvm_reject ? 1 : 0;
      }
      StudyRow row;
      row.cell = cell;
      row.alpha = cfg.alphas[a];
      row.ks_rate = static_cast<double>(ks_rejects) / static_cast<double>(cfg.reps);
      row.cvm_rate = static_cast<double>(cvm_rejects) / static_cast<double>(cfg.reps);
      row.reps = cfg.reps;
      row.B = cfg.B;
      row.seed = cell_seed;
      row.runtime_sec = secs;
      result.rows.push_back(row);
    }
  }
  return result;
}

std::uint64_t splitmix_cell_seed(std::uint64_t master, const std::string& cell_key) {
  std::uint64_t s = master ^ fnv1a64(cell_key);
  return splitmix64(s);
}

void write_study_csv(std::ostream& os, const StudyResult& result) {
  os << "model,case,dgp,n,c,alpha,stat,rate,reps,B,seed\n";
  char buf[256];
  for (const auto& r : result.rows) {
    const std::string case_str =
        to_string(r.cell.error_case) + (r.cell.known_cf ? "-known" : "-unknown");
    for (int stat = 0; stat < 2; ++stat) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%s,%zu,%g,%g,%s,%.17g,%zu,%zu,%llu\n",
                    to_string(r.cell.model).c_str(), case_str.c_str(),
                    to_string(r.cell.dgp).c_str(), r.cell.n, r.cell.c, r.alpha,
                    stat == 0 ? "ks" : "cvm", stat == 0 ? r.ks_rate : r.cvm_rate, r.reps, r.B,
                    static_cast<unsigned long long>(r.seed));
      os << buf;
    }
  }
}

void write_study_table(std::ostream& os, const StudyResult& result) {
  char buf[256];
  os << "model  case                 dgp  n      c      alpha  ks      cvm     reps  B    time\n";
  for (const auto& r : result.rows) {
    const std::string case_str =
        to_string(r.cell.error_case) + (r.cell.known_cf ? "-known" : "-unknown");
    std::snprintf(buf, sizeof(buf), "%-6s %-20s %-4s %-6zu %-6g %-6g %-7.3f %-7.3f %-5zu %-4zu %.1fs\n",
                  to_string(r.cell.model).c_str(), case_str.c_str(),
                  to_string(r.cell.dgp).c_str(), r.cell.n, r.cell.c, r.alpha, r.ks_rate,
                  r.cvm_rate, r.reps, r.B, r.runtime_sec);
    os << buf;
  }
  for (const auto& e : result.cell_errors) os << "FAILED  " << e << "\n";
}

}  // namespace hemet
