#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>

#include <Eigen/Core>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "fcmwave/errors.hpp"
#include "fcmwave/harness.hpp"

namespace fcmwave {

void set_threads(int n) {
  if (n < 1) throw ConfigError("--threads must be >= 1");
  Eigen::setNbThreads(n);
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
}

namespace {

StudyRow row_from(const BenchmarkReport& r) {
  StudyRow row;
  row.method = r.method;
  row.p = r.p;
  row.n_e = r.n_e;
  row.n_dof = r.n_dof;
  row.n_c = r.n_c;
  row.dt_crit = r.dt_crit;
  row.dt = r.dt_used;
  row.error = r.error;
  row.timings = r.timings;
  return row;
}

std::optional<double> error_against(const SignalMatrix& sig, const SignalMatrix* ref) {
  if (!ref) return std::nullopt;
  return relative_error(sig, ref->resample(static_cast<int>(sig.n_s())));
}

}  // namespace

std::vector<StudyRow> convergence_study(const BenchmarkConfig& cfg,
                                        const std::vector<int>& n_e_list,
                                        const SignalMatrix* reference) {
  std::vector<StudyRow> rows;
  for (int n_e : n_e_list) {
    BenchmarkConfig c = cfg;
    c.spec.n_e = n_e;
    RunResult r = simulate(c);
    r.report.error = error_against(r.signals, reference);
    rows.push_back(row_from(r.report));
  }
  return rows;
}

TimingResult timing_study(const std::vector<BenchmarkConfig>& cfgs, int repetitions,
                          const SignalMatrix* reference) {
  if (repetitions < 1) throw ConfigError("timing_study: repetitions must be >= 1");
  set_threads(1);
  TimingResult out;
  for (const BenchmarkConfig& cfg : cfgs) {
    const Discretization d = discretize(cfg);
    const double dtc = critical_dt(d, cfg);
    std::vector<StudyRow> runs;
    Eigen::MatrixXd first;
    for (int k = 0; k < repetitions; ++k) {
      RunResult r = simulate(cfg, d, dtc);
      if (k == 0) {
        first = r.signals.values;
        r.report.error = error_against(r.signals, reference);
      } else {
        if (r.signals.values.size() != first.size() ||
            std::memcmp(r.signals.values.data(), first.data(),
                        sizeof(double) * static_cast<std::size_t>(first.size())) != 0)
          out.deterministic = false;
        r.report.error = runs.front().error;
      }
      StudyRow row = row_from(r.report);
      row.run = std::to_string(k + 1);
      runs.push_back(row);
    }
    StudyRow mean = runs.front();
    mean.run = "mean";
    mean.timings = {};
    for (const StudyRow& r : runs) {
      mean.timings.factorization += r.timings.factorization / repetitions;
      mean.timings.rhs += r.timings.rhs / repetitions;
      mean.timings.backward_insertion += r.timings.backward_insertion / repetitions;
    }
    out.rows.insert(out.rows.end(), runs.begin(), runs.end());
    out.rows.push_back(mean);
    int dim = d.sys.n_dof;
    if (cfg.integrator.kind == Integrator::IMEX)
      dim = static_cast<int>(d.sys.partition.c_set.size());
    else if (cfg.integrator.kind == Integrator::CDM && is_structurally_diagonal(d.sys.M))
      dim = 0;
    out.factor_dims.push_back(dim);
  }
  return out;
}

void write_study_csv(const std::string& path, const std::vector<StudyRow>& rows) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  bool with_run = false;
  for (const StudyRow& r : rows) with_run |= !r.run.empty();
  os << "method,p,n_e,n_dof,dt_crit,dt,error,t_fact,t_rhs,t_binsert";
  if (with_run) os << ",run";
  os << '\n' << std::setprecision(10);
  for (const StudyRow& r : rows) {
    os << r.method << ',' << r.p << ',' << r.n_e << ',' << r.n_dof << ',';
    if (std::isfinite(r.dt_crit))
      os << r.dt_crit;
    else
      os << "inf";
    os << ',' << r.dt << ',';
    if (r.error)
      os << *r.error;
    else
      os << "nan";
    os << ',' << r.timings.factorization << ',' << r.timings.rhs << ','
       << r.timings.backward_insertion;
    if (with_run) os << ',' << r.run;
    os << '\n';
  }
}

}  // namespace fcmwave
