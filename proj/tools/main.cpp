// Command line front end: run (test a dataset), simulate (Monte Carlo
// studies), kernel (curve dumps for plotting).

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hemet/io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct DumpRange {
  double lo = -2.0;
  double hi = 2.0;
  std::size_t count = 401;
};

DumpRange parse_dump_range(const std::string& text) {
  const auto c1 = text.find(':');
  const auto c2 = text.rfind(':');
  if (c1 == std::string::npos || c2 == c1)
    throw hemet::Error(hemet::errc::config, "range: expected lo:hi:count");
  DumpRange r;
  try {
    r.lo = std::stod(text.substr(0, c1));
    r.hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    r.count = std::stoul(text.substr(c2 + 1));
  } catch (...) {
    throw hemet::Error(hemet::errc::config, "range: cannot parse '" + text + "'");
  }
  if (!(r.lo < r.hi) || r.count < 2)
    throw hemet::Error(hemet::errc::config, "range: need lo < hi and count >= 2");
  return r;
}

int cmd_run_main(const std::string& data, const std::string& ycol, const std::string& wcol,
                 const std::string& wrepcol, const std::string& error_spec,
                 const std::string& mean, double bandwidth_c, double bandwidth,
                 const std::string& grid, std::size_t B, std::vector<double> alphas,
                 std::uint64_t seed, const std::string& out, int threads) {
  hemet::RunConfig cfg;
  cfg.data = data;
  cfg.columns.y = ycol;
  cfg.columns.w = wcol;
  if (!wrepcol.empty()) cfg.columns.w_rep = wrepcol;
  cfg.error = hemet::ErrorSpecConfig::parse(error_spec);
  if (mean == "constant")
    cfg.mean = hemet::MeanFamily::constant;
  else if (mean == "linear")
    cfg.mean = hemet::MeanFamily::linear;
  else
    throw hemet::Error(hemet::errc::config, "--mean must be constant or linear");
  if (bandwidth > 0.0) cfg.bandwidth = bandwidth;
  cfg.bandwidth_c = bandwidth_c;
  cfg.grid = hemet::GridSpec::parse(grid);
  cfg.B = B;
  if (!alphas.empty()) cfg.alphas = std::move(alphas);
  cfg.seed = seed;
  if (!out.empty()) cfg.out = out;
  cfg.n_threads = threads;

  const auto report = hemet::cmd_run(cfg);
  std::cout << hemet::format_report(report);
  std::fprintf(stderr, "elapsed: %.2fs\n", report.elapsed_sec);
  if (!out.empty()) std::fprintf(stderr, "report written to %s (and %s.kv)\n", out.c_str(), out.c_str());
  return 0;
}

int cmd_simulate_main(std::vector<std::string> models, std::vector<std::string> cases,
                      std::vector<std::string> dgps, std::vector<std::size_t> ns,
                      std::vector<double> cs, std::vector<std::string> cf_modes,
                      std::size_t reps, std::size_t B, std::vector<double> alphas,
                      std::uint64_t seed, const std::string& grid, const std::string& out,
                      int threads) {
  hemet::StudyConfig study;
  if (models.empty()) models = {"1"};
  if (cases.empty()) cases = {"ordinary"};
  if (dgps.empty()) dgps = {"0"};
  if (ns.empty()) ns = {500};
  if (cs.empty()) cs = {1.0};
  if (cf_modes.empty()) cf_modes = {"known"};

  for (const auto& m : models)
    for (const auto& c : cases)
      for (const auto& mode : cf_modes)
        for (const auto& d : dgps)
          for (auto n : ns)
            for (double cc : cs) {
              hemet::StudyCell cell;
              if (m == "1")
                cell.model = hemet::ModelKind::linear1;
              else if (m == "2")
                cell.model = hemet::ModelKind::constant2;
              else
                throw hemet::Error(hemet::errc::config, "--model must be 1 or 2");
              if (c == "ordinary")
                cell.error_case = hemet::ErrorCase::ordinary_laplace;
              else if (c == "supersmooth")
                cell.error_case = hemet::ErrorCase::supersmooth_gaussian;
              else
                throw hemet::Error(hemet::errc::config,
                                   "--case must be ordinary or supersmooth");
              if (mode == "known")
                cell.known_cf = true;
              else if (mode == "unknown")
                cell.known_cf = false;
              else
                throw hemet::Error(hemet::errc::config, "--cf must be known or unknown");
              if (d == "0")
                cell.dgp = hemet::DgpKind::d0;
              else if (d == "1")
                cell.dgp = hemet::DgpKind::d1;
              else if (d == "2")
                cell.dgp = hemet::DgpKind::d2;
              else
                throw hemet::Error(hemet::errc::config, "--dgp must be 0, 1 or 2");
              cell.n = n;
              cell.c = cc;
              study.cells.push_back(cell);
            }
  study.reps = reps;
  study.B = B;
  if (!alphas.empty()) study.alphas = std::move(alphas);
  study.seed = seed;
  study.n_threads = threads;
  const auto gs = hemet::GridSpec::parse(grid);
  study.grid = gs.build();

  hemet::SimulateConfig cfg;
  cfg.study = std::move(study);
  if (!out.empty()) cfg.out = out;

  const auto result = hemet::cmd_simulate(cfg);
  hemet::write_study_table(std::cout, result);
  if (!out.empty()) std::fprintf(stderr, "csv written to %s\n", out.c_str());
  return result.cell_errors.empty() ? 0 : kExitNumerical;
}

int cmd_kernel_main(const std::string& curve, const std::string& error_spec, double bandwidth,
                    const std::string& range, const std::string& out) {
  hemet::KernelDumpConfig cfg;
  if (curve == "kft")
    cfg.curve = hemet::KernelDumpConfig::Curve::kft;
  else if (curve == "cf")
    cfg.curve = hemet::KernelDumpConfig::Curve::cf;
  else if (curve == "decon")
    cfg.curve = hemet::KernelDumpConfig::Curve::decon;
  else
    throw hemet::Error(hemet::errc::config, "--curve must be kft, cf or decon");
  if (!error_spec.empty()) cfg.error = hemet::ErrorSpecConfig::parse(error_spec);
  cfg.bandwidth = bandwidth;
  const auto r = parse_dump_range(range);
  cfg.lo = r.lo;
  cfg.hi = r.hi;
  cfg.count = r.count;
  if (!out.empty()) cfg.out = out;

  const auto text = hemet::cmd_kernel(cfg);
  if (out.empty()) std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrated-conditional-moment heteroskedasticity tests for regressions with "
               "a mismeasured covariate"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Test one dataset for heteroskedasticity");
  std::string data, ycol = "y", wcol = "w", wrepcol, error_spec, mean = "linear";
  std::string grid = "-1:1:41", out;
  double bandwidth_c = 1.0, bandwidth = 0.0;
  std::size_t B = 199;
  std::vector<double> alphas;
  std::uint64_t seed = 1;
  int threads = 1;
  run->add_option("--data", data, "CSV file with the observations")->required();
  run->add_option("--y-col", ycol, "response column name");
  run->add_option("--w-col", wcol, "covariate column name");
  run->add_option("--wrep-col", wrepcol, "replicate measurement column name");
  run->add_option("--error", error_spec,
                  "known:laplace:var=V | known:gaussian:var=V | known:gaussian:sd=S | unknown")
      ->required();
  run->add_option("--mean", mean, "mean family: constant | linear");
  run->add_option("--bandwidth-c", bandwidth_c, "rule-of-thumb constant c");
  run->add_option("--bandwidth", bandwidth, "explicit bandwidth (overrides the rule)");
  run->add_option("--grid", grid, "frequency grid lo:hi:count (count odd, >= 5)");
  run->add_option("--bootstrap", B, "bootstrap replicates B");
  run->add_option("--alpha", alphas, "significance level (repeatable)");
  run->add_option("--seed", seed, "random seed");
  run->add_option("--out", out, "write the report here (plus <out>.kv)");
  run->add_option("--threads", threads, "worker threads");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo size/power study");
  std::vector<std::string> models, cases, dgps, cf_modes;
  std::vector<std::size_t> ns;
  std::vector<double> cs;
  std::size_t reps = 500;
  std::size_t simB = 199;
  std::vector<double> sim_alphas;
  std::uint64_t sim_seed = 1;
  std::string sim_grid = "-1:1:41", sim_out;
  int sim_threads = 1;
  sim->add_option("--model", models, "1 (linear) or 2 (constant); repeatable");
  sim->add_option("--case", cases, "ordinary | supersmooth; repeatable");
  sim->add_option("--dgp", dgps, "0 | 1 | 2; repeatable");
  sim->add_option("--n", ns, "sample size; repeatable");
  sim->add_option("--c", cs, "bandwidth constant; repeatable");
  sim->add_option("--cf", cf_modes, "known | unknown; repeatable");
  sim->add_option("--reps", reps, "Monte Carlo repetitions per cell");
  sim->add_option("--bootstrap", simB, "bootstrap replicates B");
  sim->add_option("--alpha", sim_alphas, "significance level (repeatable)");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--grid", sim_grid, "frequency grid lo:hi:count");
  sim->add_option("--out", sim_out, "write the CSV here");
  sim->add_option("--threads", sim_threads, "worker threads");

  // kernel
  auto* ker = app.add_subcommand("kernel", "Dump kernel/CF curves for plotting");
  std::string curve = "kft", ker_error, ker_range = "-2:2:401", ker_out;
  double ker_bandwidth = 1.0;
  ker->add_option("--curve", curve, "kft | cf | decon");
  ker->add_option("--error", ker_error, "error spec (cf/decon curves)");
  ker->add_option("--bandwidth", ker_bandwidth, "bandwidth (decon curve)");
  ker->add_option("--grid", ker_range, "dump range lo:hi:count");
  ker->add_option("--out", ker_out, "write the dump here");

  try {
    app.parse(argc, argv);
    if (run->parsed())
      return cmd_run_main(data, ycol, wcol, wrepcol, error_spec, mean, bandwidth_c, bandwidth,
                          grid, B, alphas, seed, out, threads);
    if (sim->parsed())
      return cmd_simulate_main(models, cases, dgps, ns, cs, cf_modes, reps, simB, sim_alphas,
                               sim_seed, sim_grid, sim_out, sim_threads);
    if (ker->parsed())
      return cmd_kernel_main(curve, ker_error, ker_bandwidth, ker_range, ker_out);
    return kExitConfig;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const hemet::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.is_config() ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
}
