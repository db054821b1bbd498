#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fcmwave/assembly.hpp"
#include "fcmwave/basis.hpp"
#include "fcmwave/geometry.hpp"
#include "fcmwave/stabilization.hpp"
#include "fcmwave/timeint.hpp"

namespace fcmwave {

struct IntegratorConfig {
  Integrator kind = Integrator::CDM;
  double beta = 0.25;
  double gamma = 0.5;
  double dt_max = std::numeric_limits<double>::infinity();
  int n_t = 0;  // 0: smallest multiple of n_s with T / n_t <= select_dt
};

struct ReferenceConfig {
  int n_e = 6;
  int p = 6;
  double dt = 1e-4;
  std::string csv;  // optional cache of reference signals
};

struct BenchmarkConfig {
  double l_p = 0.3;
  double l_e = 0.5;
  CardanAngles angles{10.0, 10.0, 10.0};
  SourceSpec source;
  double T = 1.0;
  Material material;
  bool boundary_fitted = false;
  BasisSpec spec{BasisFamily::GllLagrange, 3, 10};
  StabilizationParams stabilization;
  IntegratorConfig integrator;
  int octree_depth = 4;
  int discard_depth = 6;
  LoadOptions load;
  int n_s = 10000;
  ReferenceConfig reference;
  double power_tol = 1e-9;
  int power_max_iter = 200000;
  std::uint64_t seed = kDefaultPowerSeed;
  std::vector<int> study_n_e{6, 10, 13};
  int repetitions = 10;
  /// Per-method overrides (JSON objects merged onto this config).
  std::vector<std::string> timing_configs;

  ImmersedGeometry geometry() const;
  void validate() const;

  /// Keys missing from the JSON keep their defaults; unknown keys throw.
  static BenchmarkConfig from_json_text(const std::string& text);
  static BenchmarkConfig from_file(const std::string& path);
  std::string to_json_text() const;
  /// This config with a JSON object of overrides applied.
  BenchmarkConfig with_overrides(const std::string& json_object) const;
};

// ------------------------------------------------------------ observers

struct Observer {
  std::string type;  // source, center, face, edge, corner
  Vec3 x_local;
};

struct ObserverSet {
  std::vector<Observer> points;

  /// The 11 benchmark observers in the cube-centered frame.
  static ObserverSet benchmark(double l_p);
  std::vector<Vec3> positions() const;
};

/// n_p x n_s samples at t_j = j T / n_s, j = 1..n_s.
struct SignalMatrix {
  Eigen::MatrixXd values;
  double T = 1.0;

  Eigen::Index n_p() const { return values.rows(); }
  Eigen::Index n_s() const { return values.cols(); }
  double time(Eigen::Index j) const { return T * double(j + 1) / double(n_s()); }
  /// Every (n_s / target)-th sample; n_s must be divisible by target.
  SignalMatrix resample(int target) const;

  void write_csv(const std::string& path) const;
  static SignalMatrix read_csv(const std::string& path);
};

/// Signals at n_s equidistant times from a trajectory recorded at every
/// step (n_t must be divisible by n_s).
SignalMatrix sample_observers(const Trajectory& traj, int n_s, double T);

/// Mean over observers of |sig_i - ref_i|_2 / |ref_i|_2.
double relative_error(const SignalMatrix& sig, const SignalMatrix& ref);

// ----------------------------------------------------------- simulation

struct Discretization {
  Grid grid;
  DofMap dofs;
  DiscreteSystem sys;
};

Discretization discretize(const BenchmarkConfig& cfg);

/// Critical step of the chosen integrator: CDM uses (K, M), IMEX the
/// explicit d-set block, trapezoidal Newmark is unconditionally stable
/// (infinity).
double critical_dt(const Discretization& d, const BenchmarkConfig& cfg);

/// n_t from the config, or the smallest multiple of n_s with T / n_t <= dt.
int choose_n_t(const BenchmarkConfig& cfg, double dt_bound);

struct BenchmarkReport {
  std::string method;
  int p = 0;
  int n_e = 0;
  int n_dof = 0;
  int n_c = 0;
  double dt_crit = 0.0;
  double dt_used = 0.0;
  int n_t = 0;
  std::optional<double> error;
  StageTimings timings;
  std::uint64_t seed = 0;
  bool boundary_fitted = false;
  double alpha = 0.0, epsilon = 0.0, f_lambda = 0.0;
  std::string lumping, integrator, family;

  std::string to_json_text() const;
  static BenchmarkReport from_json_text(const std::string& text);
};

struct RunResult {
  BenchmarkReport report;
  SignalMatrix signals;  // at cfg.n_s samples
};

/// Method label used in reports and study tables.
std::string method_label(const BenchmarkConfig& cfg);

/// Assemble, choose dt, integrate, sample at cfg.n_s.
RunResult simulate(const BenchmarkConfig& cfg);
RunResult simulate(const BenchmarkConfig& cfg, const Discretization& d, double dt_crit);

/// Boundary-fitted GLL-Lagrange SEM reference with CDM (matrix-free
/// stiffness), sampled at every step.
SignalMatrix reference_run(const BenchmarkConfig& cfg);
/// reference_run with the CSV cache of cfg.reference.csv when present.
SignalMatrix load_or_compute_reference(const BenchmarkConfig& cfg);

int dof_count(const BenchmarkConfig& cfg);

// --------------------------------------------------------------- studies

struct StudyRow {
  std::string method;
  int p = 0, n_e = 0, n_dof = 0;
  double dt_crit = 0.0, dt = 0.0;
  std::optional<double> error;
  StageTimings timings;
  std::string run;  // repetition index or "mean"; empty for convergence rows
  int n_c = 0;
};

std::vector<StudyRow> convergence_study(const BenchmarkConfig& cfg,
                                        const std::vector<int>& n_e_list,
                                        const SignalMatrix* reference);

struct TimingResult {
  std::vector<StudyRow> rows;  // individual repetitions and one mean row per method
  bool deterministic = true;   // signals bit-identical across repetitions
  std::vector<int> factor_dims;  // per method: dimension of the factorized matrix
};

/// Repeated single-threaded runs of each configuration; discretization and
/// dt are computed once per configuration, only time stepping is repeated.
TimingResult timing_study(const std::vector<BenchmarkConfig>& cfgs, int repetitions,
                          const SignalMatrix* reference);

void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows);

// ------------------------------------------------------------------ CLI

/// Sets Eigen/OpenMP thread counts.
void set_threads(int n);

int cli_main(int argc, char** argv);

}  // namespace fcmwave
