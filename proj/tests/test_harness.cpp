#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fcmwave/harness.hpp"

using namespace fcmwave;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fcmwave_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliResult {
  int code;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(FCMWAVE_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 256> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string write_config(const fs::path& dir, const std::string& json) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << json;
  return p.string();
}

SignalMatrix signals(const Eigen::MatrixXd& v, double T = 1.0) {
  SignalMatrix s;
  s.values = v;
  s.T = T;
  return s;
}

}  // namespace

TEST(Config, DefaultsMatchBenchmark) {
  const BenchmarkConfig c;
  EXPECT_EQ(c.l_p, 0.3);
  EXPECT_EQ(c.l_e, 0.5);
  EXPECT_EQ(c.angles.phi, 10.0);
  EXPECT_EQ(c.T, 1.0);
  EXPECT_EQ(c.source.sigma_s, 0.01);
  EXPECT_EQ(c.source.f_e, 10.0);
  EXPECT_EQ(c.source.x_l_local, Vec3(-0.15, 0, 0));
  const BenchmarkConfig parsed = BenchmarkConfig::from_json_text("{}");
  EXPECT_EQ(parsed.source.x_l_local, Vec3(-0.15, 0, 0));
  EXPECT_EQ(parsed.to_json_text(), c.to_json_text());
}

TEST(Config, RoundTripAndOverrides) {
  BenchmarkConfig c = BenchmarkConfig::from_json_text(
      R"({"basis": {"family": "bspline", "p": 2, "n_e": 7}, "alpha": 1e-4, "epsilon": 1e-6,
          "lumping": "hrz", "integrator": "newmark", "dt_max": 0.002, "n_s": 100,
          "timing": {"repetitions": 3, "configs": [{"integrator": "cdm"}]}})");
  EXPECT_EQ(c.spec.family, BasisFamily::BSpline);
  EXPECT_EQ(c.spec.n_e, 7);
  EXPECT_EQ(c.stabilization.lumping, Lumping::HRZ);
  EXPECT_EQ(c.integrator.kind, Integrator::Newmark);
  const BenchmarkConfig back = BenchmarkConfig::from_json_text(c.to_json_text());
  EXPECT_EQ(back.to_json_text(), c.to_json_text());
  const BenchmarkConfig o = c.with_overrides(c.timing_configs.at(0));
  EXPECT_EQ(o.integrator.kind, Integrator::CDM);
  EXPECT_EQ(o.spec.n_e, 7);
  EXPECT_TRUE(std::isinf(c.with_overrides(R"({"dt_max": null})").integrator.dt_max));
}

TEST(Config, Rejections) {
  EXPECT_THROW(BenchmarkConfig::from_json_text("{"), ConfigError);
  EXPECT_THROW(BenchmarkConfig::from_json_text(R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(BenchmarkConfig::from_json_text(R"({"basis": {"q": 1}})"), ConfigError);
  EXPECT_THROW(BenchmarkConfig::from_json_text(R"({"basis": {"p": "three"}})"), ConfigError);
  EXPECT_THROW(BenchmarkConfig::from_json_text(R"({"geometry": {"l_p": 0.6}})"), ConfigError);
  EXPECT_THROW(BenchmarkConfig::from_json_text(R"({"n_s": 100, "n_t": 150})"), ConfigError);
  EXPECT_THROW(BenchmarkConfig::from_json_text(R"({"integrator": "imex", "basis": {"family": "bspline"}})"),
               ConfigError);
  EXPECT_THROW(BenchmarkConfig::from_file("/nonexistent/config.json"), ConfigError);
}

TEST(Observers, BenchmarkSet) {
  const ObserverSet o = ObserverSet::benchmark(0.3);
  ASSERT_EQ(o.points.size(), 11u);
  const double h = 0.15;
  EXPECT_EQ(o.points[0].type, "source");
  EXPECT_EQ(o.points[0].x_local, Vec3(-h, 0, 0));
  EXPECT_EQ(o.points[1].type, "center");
  EXPECT_EQ(o.points[1].x_local, Vec3::Zero());
  EXPECT_EQ(o.points[2].type, "face");
  EXPECT_EQ(o.points[2].x_local, Vec3(h, 0, 0));
  int edges = 0, corners = 0;
  for (const Observer& p : o.points) {
    EXPECT_LE(p.x_local.cwiseAbs().maxCoeff(), h);
    if (p.type == "edge") {
      ++edges;
      EXPECT_EQ(p.x_local[0], 0.0);
      EXPECT_EQ(std::abs(p.x_local[1]), h);
      EXPECT_EQ(std::abs(p.x_local[2]), h);
    }
    if (p.type == "corner") {
      ++corners;
      EXPECT_EQ(p.x_local.cwiseAbs(), Vec3::Constant(h));
      EXPECT_EQ(p.x_local[0], h);
    }
  }
  EXPECT_EQ(edges, 4);
  EXPECT_EQ(corners, 4);
  EXPECT_EQ(o.positions().size(), 11u);
}

TEST(RelativeError, Examples) {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> g;
  Eigen::MatrixXd ref(11, 50);
  for (Eigen::Index i = 0; i < ref.size(); ++i) ref.data()[i] = g(rng);
  EXPECT_EQ(relative_error(signals(ref), signals(ref)), 0.0);
  EXPECT_NEAR(relative_error(signals(2.0 * ref), signals(ref)), 1.0, 1e-15);
  EXPECT_NEAR(relative_error(signals(Eigen::RowVector2d(1, 0)), signals(Eigen::RowVector2d(0, 1))),
              std::sqrt(2.0), 1e-15);
  EXPECT_THROW(relative_error(signals(ref), signals(ref.leftCols(10))), ConfigError);
  Eigen::MatrixXd zero_row = ref;
  zero_row.row(3).setZero();
  EXPECT_THROW(relative_error(signals(ref), signals(zero_row)), NumericalError);
}

TEST(Sampling, ResampleIsProjection) {
  Trajectory traj;
  const int n_t = 1000;
  traj.samples.resize(3, n_t + 1);
  for (int k = 0; k <= n_t; ++k)
    for (int i = 0; i < 3; ++i) traj.samples(i, k) = std::sin(0.01 * k * (i + 1)) + k;
  const SignalMatrix full = sample_observers(traj, n_t, 1.0);
  EXPECT_EQ(full.n_s(), n_t);
  EXPECT_EQ(full.values.col(0), traj.samples.col(1));
  EXPECT_NEAR(full.time(n_t - 1), 1.0, 1e-15);
  const SignalMatrix coarse = sample_observers(traj, 100, 1.0);
  EXPECT_EQ(coarse.values, full.resample(100).values);
  EXPECT_EQ(coarse.values.col(99), traj.samples.col(n_t));
  EXPECT_NEAR(coarse.time(0), 0.01, 1e-15);
  EXPECT_THROW(sample_observers(traj, 300, 1.0), ConfigError);
  EXPECT_THROW(full.resample(300), ConfigError);

  Trajectory constant;
  constant.samples = Eigen::MatrixXd::Constant(11, 101, 2.5);
  EXPECT_EQ(sample_observers(constant, 10, 1.0).values, Eigen::MatrixXd::Constant(11, 10, 2.5));
}

TEST(Sampling, CsvRoundTrip) {
  const fs::path dir = scratch("csv");
  std::mt19937_64 rng(72);
  std::normal_distribution<double> g;
  Eigen::MatrixXd v(11, 20);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = g(rng);
  const SignalMatrix s = signals(v, 0.5);
  s.write_csv((dir / "s.csv").string());
  std::ifstream is(dir / "s.csv");
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "t,psi_1,psi_2,psi_3,psi_4,psi_5,psi_6,psi_7,psi_8,psi_9,psi_10,psi_11");
  const SignalMatrix r = SignalMatrix::read_csv((dir / "s.csv").string());
  EXPECT_EQ(r.values, v);
  EXPECT_DOUBLE_EQ(r.T, 0.5);
}

TEST(Report, JsonRoundTrip) {
  BenchmarkReport r;
  r.method = "scm-imex";
  r.p = 3;
  r.n_e = 13;
  r.n_dof = 22816;
  r.n_c = 16868;
  r.dt_crit = 5.846921e-3;
  r.dt_used = 1.0 / 190;
  r.n_t = 190;
  r.error = 0.0412345678901234;
  r.timings = {0.125, 1.5, 2.75};
  r.seed = 99;
  r.alpha = 1e-12;
  r.f_lambda = 1e-2;
  r.lumping = "none";
  r.integrator = "imex";
  r.family = "gll";
  const BenchmarkReport b = BenchmarkReport::from_json_text(r.to_json_text());
  EXPECT_EQ(b.to_json_text(), r.to_json_text());
  EXPECT_EQ(b.dt_used, r.dt_used);
  EXPECT_EQ(*b.error, *r.error);
  EXPECT_EQ(b.timings.rhs, 1.5);
  BenchmarkReport none = r;
  none.error.reset();
  EXPECT_FALSE(BenchmarkReport::from_json_text(none.to_json_text()).error.has_value());
}

TEST(Steps, ChooseNt) {
  BenchmarkConfig c;
  c.n_s = 100;
  EXPECT_EQ(choose_n_t(c, 1e-3), 1000);
  EXPECT_EQ(choose_n_t(c, 9.99e-4), 1100);
  c.integrator.n_t = 300;
  EXPECT_EQ(choose_n_t(c, 1e-3), 300);
}

TEST(Simulation, DofCounts) {
  BenchmarkConfig c;
  c.spec = {BasisFamily::GllLagrange, 2, 28};
  EXPECT_EQ(dof_count(c), 52353);
  c.boundary_fitted = true;
  c.spec = {BasisFamily::GllLagrange, 3, 10};
  EXPECT_EQ(dof_count(c), 29791);
  c.boundary_fitted = false;
  std::vector<int> counts;
  for (int n_e : {6, 10, 13}) {
    c.spec.n_e = n_e;
    counts.push_back(dof_count(c));
  }
  EXPECT_LT(counts[0], counts[1]);
  EXPECT_LT(counts[1], counts[2]);
}

TEST(Simulation, BoundaryFittedReferenceSymmetry) {
  BenchmarkConfig c;
  c.reference = {4, 4, 5e-4, ""};
  c.T = 0.4;
  const SignalMatrix ref = reference_run(c);
  ASSERT_EQ(ref.n_p(), 11);
  EXPECT_EQ(ref.n_s(), 800);
  const Eigen::Index edges[] = {3, 4, 5, 6}, corners[] = {7, 8, 9, 10};
  const double scale = ref.values.cwiseAbs().maxCoeff();
  ASSERT_GT(scale, 0.0);
  for (Eigen::Index i : edges) EXPECT_LT((ref.values.row(i) - ref.values.row(edges[0])).cwiseAbs().maxCoeff(), 1e-10 * scale);
  for (Eigen::Index i : corners) EXPECT_LT((ref.values.row(i) - ref.values.row(corners[0])).cwiseAbs().maxCoeff(), 1e-10 * scale);
  EXPECT_GT((ref.values.row(2) - ref.values.row(3)).cwiseAbs().maxCoeff(), 1e-6 * scale);

  c.reference.dt = 1e-2;
  EXPECT_THROW(reference_run(c), ConfigError);
}

TEST(Simulation, ImmersedRunBreaksObserverSymmetry) {
  BenchmarkConfig c = BenchmarkConfig::from_json_text(
      R"({"basis": {"p": 2, "n_e": 6}, "T": 0.4, "n_s": 100})");
  const RunResult r = simulate(c);
  EXPECT_EQ(r.report.method, "scm-cdm");
  EXPECT_EQ(r.signals.n_s(), 100);
  EXPECT_EQ(r.report.n_t % 100, 0);
  EXPECT_LE(r.report.dt_used, 0.9 * r.report.dt_crit);
  if (r.report.n_t > 100) EXPECT_GT(c.T / (r.report.n_t - 100), 0.9 * r.report.dt_crit);
  const double scale = r.signals.values.cwiseAbs().maxCoeff();
  EXPECT_GT((r.signals.values.row(3) - r.signals.values.row(4)).cwiseAbs().maxCoeff(), 1e-6 * scale);
  const RunResult again = simulate(c);
  EXPECT_EQ(std::memcmp(r.signals.values.data(), again.signals.values.data(),
                        sizeof(double) * r.signals.values.size()),
            0);
}

TEST(Simulation, MethodLabels) {
  BenchmarkConfig c;
  EXPECT_EQ(method_label(c), "scm-cdm");
  c.spec.family = BasisFamily::BSpline;
  c.stabilization.lumping = Lumping::RowSum;
  EXPECT_NE(method_label(c), "scm-cdm");
  EXPECT_EQ(method_label(c).substr(0, 3), "iga");
}

TEST(Studies, ConvergenceAndTiming) {
  BenchmarkConfig c = BenchmarkConfig::from_json_text(
      R"({"basis": {"p": 2, "n_e": 4}, "T": 0.2, "n_s": 20, "alpha": 1e-4})");
  const auto rows = convergence_study(c, {3, 4}, nullptr);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LT(rows[0].n_dof, rows[1].n_dof);
  EXPECT_FALSE(rows[0].error.has_value());

  BenchmarkConfig imex = c.with_overrides(R"({"integrator": "imex", "alpha": 1e-8})");
  const TimingResult t = timing_study({c.with_overrides(R"({"lumping": "hrz"})"), imex}, 2, nullptr);
  EXPECT_TRUE(t.deterministic);
  ASSERT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(t.rows[2].run, "mean");
  EXPECT_EQ(t.factor_dims[0], 0);
  EXPECT_EQ(t.rows[0].timings.factorization, 0.0);
  const Discretization d = discretize(imex);
  EXPECT_EQ(t.factor_dims[1], static_cast<int>(d.sys.partition.c_set.size()));
  EXPECT_LT(t.factor_dims[1], d.sys.n_dof);

  const TimingResult single = timing_study({c}, 1, nullptr);
  ASSERT_EQ(single.rows.size(), 2u);
  EXPECT_EQ(single.rows[0].timings.rhs, single.rows[1].timings.rhs);
  EXPECT_EQ(single.rows[0].timings.backward_insertion, single.rows[1].timings.backward_insertion);

  const fs::path dir = scratch("study");
  write_study_csv((dir / "t.csv").string(), t.rows);
  std::ifstream is(dir / "t.csv");
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "method,p,n_e,n_dof,dt_crit,dt,error,t_fact,t_rhs,t_binsert,run");
}

TEST(Cli, UnknownSubcommandExitsOne) {
  const CliResult r = run_cli("frobnicate");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli("").code, 1);
}

TEST(Cli, ConfigErrorsExitOne) {
  const fs::path dir = scratch("cli_bad");
  EXPECT_EQ(run_cli("dofs --config " + write_config(dir, R"({"nope": 1})")).code, 1);
  EXPECT_EQ(run_cli("dofs --config /nonexistent.json").code, 1);
}

TEST(Cli, DofsMatchesTable) {
  const fs::path dir = scratch("cli_dofs");
  const CliResult r = run_cli("dofs --config " + write_config(dir, R"({"basis": {"p": 3, "n_e": 13}})"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "22816\n");
}

TEST(Cli, ForcedDivergenceExitsTwo) {
  const fs::path dir = scratch("cli_div");
  const std::string cfg = write_config(dir, R"({"basis": {"p": 2, "n_e": 5}, "n_s": 10, "n_t": 20})");
  const CliResult r = run_cli("run --config " + cfg + " --out " + (dir / "out").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("instability"), std::string::npos);
}

TEST(Cli, RunDtcritAndExport) {
  const fs::path dir = scratch("cli_run");
  const std::string cfg = write_config(dir, R"({"basis": {"p": 2, "n_e": 4}, "T": 0.1, "n_s": 10})");
  const std::string out = (dir / "out").string();
  EXPECT_EQ(run_cli("run --config " + cfg + " --out " + out + " --threads 1 --seed 5").code, 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "signals.csv"));
  const BenchmarkReport rep = [&] {
    std::ifstream is(dir / "out" / "report.json");
    std::stringstream ss;
    ss << is.rdbuf();
    return BenchmarkReport::from_json_text(ss.str());
  }();
  EXPECT_EQ(rep.seed, 5u);
  const CliResult dt = run_cli("dtcrit --config " + cfg + " --seed 5");
  EXPECT_EQ(dt.code, 0);
  EXPECT_NEAR(std::stod(dt.out), rep.dt_crit, 1e-9 * rep.dt_crit);
  EXPECT_EQ(run_cli("export-matrices --config " + cfg + " --out " + out).code, 0);
  const SparseSym M = read_matrix_market((dir / "out" / "M.mtx").string());
  EXPECT_EQ(M.rows(), rep.n_dof);
  EXPECT_TRUE(fs::exists(dir / "out" / "F_s.mtx"));
}
