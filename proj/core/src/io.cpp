#include "hemet/io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hemet/rng.hpp"

namespace hemet {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& text, std::size_t row, const std::string& col) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto* first = t.data();
  const auto* last = t.data() + t.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(value))
    throw Error(errc::non_numeric_cell, "row " + std::to_string(row) + ", column '" + col +
                                            "': cannot parse '" + t + "' as a finite number");
  return value;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Sample load_sample_csv(const std::filesystem::path& path, const ColumnSpec& cols) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_failure, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(errc::too_few_rows, "empty file: " + path.string());
  const auto header = split(line, ',');
  auto find_col = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    throw Error(errc::missing_column, "column '" + name + "' not found in " + path.string());
  };
  const std::size_t yi = find_col(cols.y);
  const std::size_t wi = find_col(cols.w);
  std::optional<std::size_t> ri;
  if (cols.w_rep) ri = find_col(*cols.w_rep);

  Sample s;
  if (ri) s.w_rep.emplace();
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    const std::size_t needed = std::max({yi, wi, ri.value_or(0)});
    if (cells.size() <= needed)
      throw Error(errc::non_numeric_cell, "row " + std::to_string(row) + ": too few cells");
    s.y.push_back(parse_cell(cells[yi], row, cols.y));
    s.w.push_back(parse_cell(cells[wi], row, cols.w));
    if (ri) s.w_rep->push_back(parse_cell(cells[*ri], row, *cols.w_rep));
  }
  if (s.y.size() < 5)
    throw Error(errc::too_few_rows,
                path.string() + ": need at least 5 data rows, got " + std::to_string(s.y.size()));
  s.validate();
  return s;
}

void save_sample_csv(const std::filesystem::path& path, const Sample& sample,
                     const ColumnSpec& cols) {
  sample.validate();
  std::ostringstream os;
  os << cols.y << ',' << cols.w;
  const bool reps = sample.has_replicates();
  if (reps) os << ',' << (cols.w_rep ? *cols.w_rep : std::string("w_rep"));
  os << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    os << fmt_double(sample.y[i]) << ',' << fmt_double(sample.w[i]);
    if (reps) os << ',' << fmt_double((*sample.w_rep)[i]);
    os << '\n';
  }
  atomic_write(path, os.str());
}

ErrorSpecConfig ErrorSpecConfig::parse(const std::string& text) {
  const auto parts = split(trim(text), ':');
  ErrorSpecConfig cfg;
  if (parts.size() == 1 && parts[0] == "unknown") {
    cfg.kind = Kind::unknown;
    return cfg;
  }
  if (parts.size() == 3 && parts[0] == "known") {
    const auto kv = split(parts[2], '=');
    if (kv.size() != 2) throw Error(errc::config, "error spec: expected var=V or sd=S");
    double value = 0.0;
    try {
      value = std::stod(kv[1]);
    } catch (...) {
      throw Error(errc::config, "error spec: cannot parse '" + kv[1] + "'");
    }
    if (parts[1] == "laplace") {
      if (kv[0] != "var") throw Error(errc::config, "error spec: laplace takes var=V");
      cfg.kind = Kind::known_laplace;
      cfg.variance = value;
    } else if (parts[1] == "gaussian") {
      if (kv[0] == "var")
        cfg.variance = value;
      else if (kv[0] == "sd")
        cfg.variance = value * value;
      else
        throw Error(errc::config, "error spec: gaussian takes var=V or sd=S");
      cfg.kind = Kind::known_gaussian;
    } else {
      throw Error(errc::config, "error spec: unknown family '" + parts[1] + "'");
    }
    if (!(cfg.variance > 0.0))
      throw Error(errc::config, "error spec: variance must be positive");
    return cfg;
  }
  throw Error(errc::config,
              "error spec: expected known:laplace:var=V | known:gaussian:var=V | "
              "known:gaussian:sd=S | unknown");
}

GridSpec GridSpec::parse(const std::string& text) {
  const auto parts = split(trim(text), ':');
  if (parts.size() != 3) throw Error(errc::config, "grid: expected lo:hi:count");
  GridSpec g;
  try {
    g.lo = std::stod(parts[0]);
    g.hi = std::stod(parts[1]);
    g.count = static_cast<std::size_t>(std::stoul(parts[2]));
  } catch (...) {
    throw Error(errc::config, "grid: cannot parse '" + text + "'");
  }
  if (!(g.lo < g.hi)) throw Error(errc::config, "grid: lo must be < hi");
  if (g.count < 5 || g.count % 2 == 0)
    throw Error(errc::config, "grid: count must be odd and >= 5");
  return g;
}

void RunConfig::validate() const {
  if (data.empty()) throw Error(errc::config, "run: --data is required");
  if (error.kind == ErrorSpecConfig::Kind::unknown && !columns.w_rep)
    throw Error(errc::config, "run: unknown error spec requires --wrep-col");
  if (bandwidth && !(*bandwidth > 0.0))
    throw Error(errc::config, "run: --bandwidth must be positive");
  if (!(bandwidth_c > 0.0)) throw Error(errc::config, "run: --bandwidth-c must be positive");
  if (B < 1) throw Error(errc::config, "run: --bootstrap must be >= 1");
  if (alphas.empty()) throw Error(errc::config, "run: need at least one --alpha");
  for (double a : alphas)
    if (!(a > 0.0) || !(a < 0.5)) throw Error(errc::config, "run: alpha must lie in (0, 0.5)");
  if (n_threads < 1) throw Error(errc::config, "run: --threads must be >= 1");
  GridSpec g = grid;  // range checks
  if (!(g.lo < g.hi) || g.count < 5 || g.count % 2 == 0)
    throw Error(errc::config, "run: invalid grid");
}

TestReport cmd_run(const RunConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const Sample sample = load_sample_csv(config.data, config.columns);
  const KernelSpec kernel = flat_top_kernel();
  const FrequencyGrid grid = config.grid.build();

  TestReport report;
  report.grid = config.grid;
  report.n = sample.size();
  report.B = config.B;

  ErrorCF fe = ErrorCF::identity();
  double sigma_eps_sq = 0.0;
  Smoothness rule_case = Smoothness::ordinary;
  switch (config.error.kind) {
    case ErrorSpecConfig::Kind::known_laplace:
      fe = laplace_cf(config.error.variance);
      sigma_eps_sq = config.error.variance;
      rule_case = Smoothness::ordinary;
      report.error_spec = "known:laplace:var=" + fmt_double(config.error.variance);
      break;
    case ErrorSpecConfig::Kind::known_gaussian:
      fe = gaussian_cf(config.error.variance);
      sigma_eps_sq = config.error.variance;
      rule_case = Smoothness::supersmooth;
      report.error_spec = "known:gaussian:var=" + fmt_double(config.error.variance);
      break;
    case ErrorSpecConfig::Kind::unknown: {
      if (!sample.has_replicates())
        throw Error(errc::config, "run: unknown error spec but data has no replicate column");
      auto reps = sample.replicates();
      sigma_eps_sq = sigma_eps_from_replicates(*reps);
      if (!(sigma_eps_sq > 0.0))
        throw Error(errc::non_positive_variance,
                    "run: replicate-estimated error variance is zero");
      fe = ErrorCF::estimated(std::move(reps), config.cf_floor);
      // replicate-only information gives no decay class; the conservative
      // polynomial-decay rule is used for the bandwidth
      rule_case = Smoothness::ordinary;
      report.error_spec = "unknown";
      break;
    }
  }
  report.sigma_eps_sq = sigma_eps_sq;

  const Bandwidth b = config.bandwidth
                          ? Bandwidth(*config.bandwidth)
                          : rule_of_thumb_bandwidth(rule_case, sample.size(), sigma_eps_sq,
                                                    config.bandwidth_c);
  report.bandwidth = b.value;

  const MeanModel theta = fit_corrected_ls(sample, config.mean, sigma_eps_sq);
  report.theta = theta;

  EvalOptions requested;
  requested.n_threads = config.n_threads;
  const auto eval = resolve_eval(theta, b, fe, kernel, grid, requested);
  report.used_analytic_fallback = eval.used_fallback;

  const double sig = sigma_n_sq(sample, theta, b, fe, kernel, eval.opts);
  report.sigma_n_sq = sig;
  const auto process = empirical_process(sample, theta, sig, b, fe, kernel, grid, eval.opts);
  report.observed = reduce_statistics(process);

  MultiplierScheme scheme;
  scheme.kind = fe.is_estimated() ? MultiplierKind::std_exponential
                                  : MultiplierKind::mammen_two_point;
  scheme.seed = derive_seed(config.seed, 1);

  BootstrapConfig bcfg{theta, sig, b, fe, kernel, grid, eval.opts};
  double alpha_min = config.alphas[0];
  for (double a : config.alphas) alpha_min = std::min(alpha_min, a);
  const BootstrapOutcome outcome =
      run_bootstrap(bcfg, sample, config.B, alpha_min, scheme, report.observed);
  report.ks_pvalue = outcome.ks_pvalue;
  report.cvm_pvalue = outcome.cvm_pvalue;
  report.bootstrap_redraws = outcome.redraws;

  for (double a : config.alphas) {
    AlphaRow row;
    row.alpha = a;
    row.ks_crit = critical_value(outcome.ks_reps, a);
    row.cvm_crit = critical_value(outcome.cvm_reps, a);
    row.ks_reject = report.observed.ks > row.ks_crit;
    row.cvm_reject = report.observed.cvm > row.cvm_crit;
    report.by_alpha.push_back(row);
  }

  report.elapsed_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (config.out) {
    atomic_write(*config.out, format_report(report));
    auto kv_path = *config.out;
    kv_path += ".kv";
    atomic_write(kv_path, format_report_kv(report));
  }
  return report;
}

std::string format_report(const TestReport& r) {
  std::ostringstream os;
  os << "heteroskedasticity test under measurement error\n";
  os << "n: " << r.n << "\n";
  os << "error: " << r.error_spec << "\n";
  os << "sigma_eps_sq: " << fmt_double(r.sigma_eps_sq) << "\n";
  os << "bandwidth: " << fmt_double(r.bandwidth) << "\n";
  os << "grid: " << fmt_double(r.grid.lo) << ":" << fmt_double(r.grid.hi) << ":" << r.grid.count
     << "\n";
  os << "theta:";
  for (double t : r.theta.theta) os << " " << fmt_double(t);
  os << "\n";
  os << "sigma_n_sq: " << fmt_double(r.sigma_n_sq) << "\n";
  os << "ks: " << fmt_double(r.observed.ks) << "\n";
  os << "cvm: " << fmt_double(r.observed.cvm) << "\n";
  os << "ks_pvalue: " << fmt_double(r.ks_pvalue) << "\n";
  os << "cvm_pvalue: " << fmt_double(r.cvm_pvalue) << "\n";
  os << "bootstrap_B: " << r.B << "\n";
  os << "bootstrap_redraws: " << r.bootstrap_redraws << "\n";
  if (r.used_analytic_fallback) os << "moment_path: analytic-fallback\n";
  os << "\nalpha      ks_crit          cvm_crit         ks_reject  cvm_reject\n";
  char buf[160];
  for (const auto& a : r.by_alpha) {
    std::snprintf(buf, sizeof(buf), "%-10g %-16.10g %-16.10g %-10s %s\n", a.alpha, a.ks_crit,
                  a.cvm_crit, a.ks_reject ? "yes" : "no", a.cvm_reject ? "yes" : "no");
    os << buf;
  }
  return os.str();
}

std::string format_report_kv(const TestReport& r) {
  std::ostringstream os;
  os << "n=" << r.n << "\n";
  os << "error=" << r.error_spec << "\n";
  os << "sigma_eps_sq=" << fmt_double(r.sigma_eps_sq) << "\n";
  os << "bandwidth=" << fmt_double(r.bandwidth) << "\n";
  os << "grid=" << fmt_double(r.grid.lo) << ":" << fmt_double(r.grid.hi) << ":" << r.grid.count
     << "\n";
  for (std::size_t i = 0; i < r.theta.theta.size(); ++i)
    os << "theta" << i << "=" << fmt_double(r.theta.theta[i]) << "\n";
  os << "sigma_n_sq=" << fmt_double(r.sigma_n_sq) << "\n";
  os << "ks=" << fmt_double(r.observed.ks) << "\n";
  os << "cvm=" << fmt_double(r.observed.cvm) << "\n";
  os << "ks_pvalue=" << fmt_double(r.ks_pvalue) << "\n";
  os << "cvm_pvalue=" << fmt_double(r.cvm_pvalue) << "\n";
  os << "B=" << r.B << "\n";
  os << "redraws=" << r.bootstrap_redraws << "\n";
  for (const auto& a : r.by_alpha) {
    const std::string tag = fmt_double(a.alpha);
    os << "ks_crit_" << tag << "=" << fmt_double(a.ks_crit) << "\n";
    os << "cvm_crit_" << tag << "=" << fmt_double(a.cvm_crit) << "\n";
    os << "ks_reject_" << tag << "=" << (a.ks_reject ? 1 : 0) << "\n";
    os << "cvm_reject_" << tag << "=" << (a.cvm_reject ? 1 : 0) << "\n";
  }
  return os.str();
}

StudyResult cmd_simulate(const SimulateConfig& config) {
  const StudyResult result = run_study(config.study);
  if (config.out) {
    std::ostringstream os;
    write_study_csv(os, result);
    atomic_write(*config.out, os.str());
  }
  return result;
}

std::string cmd_kernel(const KernelDumpConfig& config) {
  if (!(config.lo < config.hi) || config.count < 2)
    throw Error(errc::config, "kernel: invalid dump range");
  const KernelSpec kernel = flat_top_kernel();

  std::optional<ErrorCF> fe;
  if (config.error) {
    switch (config.error->kind) {
      case ErrorSpecConfig::Kind::known_laplace:
        fe = laplace_cf(config.error->variance);
        break;
      case ErrorSpecConfig::Kind::known_gaussian:
        fe = gaussian_cf(config.error->variance);
        break;
      case ErrorSpecConfig::Kind::unknown:
        throw Error(errc::config, "kernel: curves need a known error spec");
    }
  }

  std::ostringstream os;
  char buf[96];
  for (std::size_t i = 0; i < config.count; ++i) {
    const double x = config.lo + (config.hi - config.lo) * static_cast<double>(i) /
                                     static_cast<double>(config.count - 1);
    double v = 0.0;
    switch (config.curve) {
      case KernelDumpConfig::Curve::kft:
        v = flat_top_kft(x);
        break;
      case KernelDumpConfig::Curve::cf:
        if (!fe) throw Error(errc::config, "kernel: cf curve needs --error");
        v = (*fe)(x);
        break;
      case KernelDumpConfig::Curve::decon:
        if (!fe) throw Error(errc::config, "kernel: decon curve needs --error");
        v = decon_kernel(x, Bandwidth(config.bandwidth), *fe, kernel);
        break;
    }
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", x, v);
    os << buf;
  }
  const std::string text = os.str();
  if (config.out) atomic_write(*config.out, text);
  return text;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io_failure, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(errc::io_failure, "write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(errc::io_failure, "rename failed for " + path.string());
  }
}

}  // namespace hemet
