#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "fcmwave/errors.hpp"
#include "fcmwave/harness.hpp"

namespace fcmwave {

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

BenchmarkConfig load_config(const Options& o) {
  BenchmarkConfig cfg = o.config.empty() ? BenchmarkConfig{} : BenchmarkConfig::from_file(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

std::string out_path(const Options& o, const std::string& name) {
  std::filesystem::create_directories(o.out);
  return (std::filesystem::path(o.out) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << text << '\n';
}

int cmd_run(const Options& o) {
  const BenchmarkConfig cfg = load_config(o);
  RunResult r = simulate(cfg);
  if (!cfg.reference.csv.empty()) {
    const SignalMatrix ref = load_or_compute_reference(cfg);
    r.report.error = relative_error(r.signals, ref.resample(cfg.n_s));
  }
  r.signals.write_csv(out_path(o, "signals.csv"));
  write_text(out_path(o, "report.json"), r.report.to_json_text());
  std::cout << r.report.method << ": n_dof = " << r.report.n_dof
            << ", dt_crit = " << r.report.dt_crit << ", dt = " << r.report.dt_used
            << ", n_t = " << r.report.n_t;
  if (r.report.error) std::cout << ", error = " << *r.report.error;
  std::cout << '\n';
  return 0;
}

int cmd_reference(const Options& o) {
  BenchmarkConfig cfg = load_config(o);
  const std::string path = out_path(o, "reference.csv");
  reference_run(cfg).write_csv(path);
  std::cout << "reference signals written to " << path << '\n';
  return 0;
}

int cmd_dtcrit(const Options& o) {
  const BenchmarkConfig cfg = load_config(o);
  const Discretization d = discretize(cfg);
  std::cout << std::setprecision(10) << critical_dt(d, cfg) << '\n';
  return 0;
}

int cmd_dofs(const Options& o) {
  std::cout << dof_count(load_config(o)) << '\n';
  return 0;
}

int cmd_converge(const Options& o) {
  const BenchmarkConfig cfg = load_config(o);
  std::optional<SignalMatrix> ref;
  if (!cfg.reference.csv.empty()) ref = load_or_compute_reference(cfg);
  const auto rows = convergence_study(cfg, cfg.study_n_e, ref ? &*ref : nullptr);
  const std::string path = out_path(o, "convergence.csv");
  write_study_csv(path, rows);
  std::cout << rows.size() << " rows written to " << path << '\n';
  return 0;
}

int cmd_timing(const Options& o) {
  if (o.threads && *o.threads != 1)
    std::cerr << "warning: --threads is ignored in timing mode (single-threaded runs)\n";
  const BenchmarkConfig cfg = load_config(o);
  std::vector<BenchmarkConfig> cfgs;
  for (const std::string& s : cfg.timing_configs) cfgs.push_back(cfg.with_overrides(s));
  if (cfgs.empty()) cfgs.push_back(cfg);
  std::optional<SignalMatrix> ref;
  if (!cfg.reference.csv.empty()) ref = load_or_compute_reference(cfg);
  const TimingResult t = timing_study(cfgs, cfg.repetitions, ref ? &*ref : nullptr);
  const std::string path = out_path(o, "timing.csv");
  write_study_csv(path, t.rows);
  std::cout << t.rows.size() << " rows written to " << path
            << (t.deterministic ? "" : " (WARNING: signals differ between repetitions)") << '\n';
  return t.deterministic ? 0 : 2;
}

int cmd_export(const Options& o) {
  const BenchmarkConfig cfg = load_config(o);
  const Discretization d = discretize(cfg);
  write_matrix_market(out_path(o, "M.mtx"), d.sys.M);
  write_matrix_market(out_path(o, "K.mtx"), d.sys.K);
  write_matrix_market(out_path(o, "F_s.mtx"), d.sys.F_s);
  std::cout << "n_dof = " << d.sys.n_dof << ", matrices written to " << o.out << '\n';
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Immersed-boundary wave propagation benchmark"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--config", o.config, "JSON configuration file");
  app.add_option("--out", o.out, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Power-iteration seed");
  auto* threads_opt = app.add_option("--threads", threads, "Thread count");

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Command commands[] = {
      {"run", "Single simulation: signals.csv and report.json", cmd_run},
      {"reference", "Boundary-fitted reference signals", cmd_reference},
      {"dtcrit", "Print the critical time step", cmd_dtcrit},
      {"dofs", "Print the number of degrees of freedom", cmd_dofs},
      {"converge", "Convergence study over study.n_e", cmd_converge},
      {"timing", "Repeated single-threaded timing runs", cmd_timing},
      {"export-matrices", "Write M, K and F_s in MatrixMarket format", cmd_export},
  };
  for (const Command& c : commands) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }
  if (seed_opt->count()) o.seed = seed;
  if (threads_opt->count()) o.threads = threads;

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name != "timing" && o.threads) set_threads(*o.threads);
    for (const Command& c : commands)
      if (name == c.name) return c.fn(o);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace fcmwave
