#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "fcmwave/errors.hpp"
#include "fcmwave/harness.hpp"
#include "fcmwave/tensor_stiffness.hpp"
#include "json.hpp"

namespace fcmwave {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

// ------------------------------------------------------------ observers

ObserverSet ObserverSet::benchmark(double l_p) {
  const double h = 0.5 * l_p;
  ObserverSet s;
  s.points.push_back({"source", Vec3(-h, 0, 0)});
  s.points.push_back({"center", Vec3(0, 0, 0)});
  s.points.push_back({"face", Vec3(h, 0, 0)});
  for (double z : {-h, h})
    for (double y : {-h, h}) s.points.push_back({"edge", Vec3(0, y, z)});
  for (double z : {-h, h})
    for (double y : {-h, h}) s.points.push_back({"corner", Vec3(h, y, z)});
  return s;
}

std::vector<Vec3> ObserverSet::positions() const {
  std::vector<Vec3> x;
  for (const Observer& o : points) x.push_back(o.x_local);
  return x;
}

// -------------------------------------------------------------- signals

SignalMatrix SignalMatrix::resample(int target) const {
  if (target < 1 || n_s() % target != 0)
    throw ConfigError("resample: " + std::to_string(n_s()) + " samples are not a multiple of " +
                      std::to_string(target));
  const Eigen::Index stride = n_s() / target;
  SignalMatrix out;
  out.T = T;
  out.values.resize(n_p(), target);
  for (Eigen::Index j = 0; j < target; ++j) out.values.col(j) = values.col((j + 1) * stride - 1);
  return out;
}

void SignalMatrix::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  os << "t";
  for (Eigen::Index i = 0; i < n_p(); ++i) os << ",psi_" << i + 1;
  os << '\n' << std::setprecision(17);
  for (Eigen::Index j = 0; j < n_s(); ++j) {
    os << time(j);
    for (Eigen::Index i = 0; i < n_p(); ++i) os << ',' << values(i, j);
    os << '\n';
  }
}

SignalMatrix SignalMatrix::read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,", 0) != 0)
    throw ConfigError("'" + path + "': missing signal header");
  const long n_p = std::count(line.begin(), line.end(), ',');
  std::vector<std::vector<double>> rows;
  std::vector<double> times;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> r;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    if (static_cast<long>(r.size()) != n_p + 1)
      throw ConfigError("'" + path + "': ragged row");
    times.push_back(r[0]);
    r.erase(r.begin());
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ConfigError("'" + path + "': no samples");
  SignalMatrix s;
  s.values.resize(n_p, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (long i = 0; i < n_p; ++i) s.values(i, static_cast<Eigen::Index>(j)) = rows[j][static_cast<std::size_t>(i)];
  s.T = times.back();
  return s;
}

SignalMatrix sample_observers(const Trajectory& traj, int n_s, double T) {
  const int n_t = static_cast<int>(traj.samples.cols()) - 1;
  if (n_s < 1 || n_t < n_s || n_t % n_s != 0)
    throw ConfigError("sample_observers: n_t = " + std::to_string(n_t) +
                      " is not a multiple of n_s = " + std::to_string(n_s));
  const int stride = n_t / n_s;
  SignalMatrix s;
  s.T = T;
  s.values.resize(traj.samples.rows(), n_s);
  for (int j = 0; j < n_s; ++j) s.values.col(j) = traj.samples.col((j + 1) * stride);
  return s;
}

double relative_error(const SignalMatrix& sig, const SignalMatrix& ref) {
  if (sig.n_p() != ref.n_p() || sig.n_s() != ref.n_s())
    throw ConfigError("relative_error: signal shapes differ");
  double e = 0.0;
  for (Eigen::Index i = 0; i < ref.n_p(); ++i) {
    const double r = ref.values.row(i).norm();
    if (!(r > 0.0))
      throw NumericalError("relative_error: reference row " + std::to_string(i + 1) +
                           " has zero norm");
    e += (sig.values.row(i) - ref.values.row(i)).norm() / r;
  }
  return e / double(ref.n_p());
}

// ----------------------------------------------------------- simulation

Discretization discretize(const BenchmarkConfig& cfg) {
  cfg.validate();
  Grid grid = cfg.boundary_fitted ? Grid::boundary_fitted(cfg.l_p, cfg.spec)
                                  : Grid::immersed(cfg.geometry(), cfg.spec, cfg.discard_depth);
  AssemblyOptions opts;
  opts.stabilization = cfg.stabilization;
  opts.octree_depth = cfg.octree_depth;
  opts.material = cfg.material;
  DofMap dofs(grid);
  DiscreteSystem sys = assemble(grid, opts);
  LoadOptions lo = cfg.load;
  lo.octree_depth = cfg.octree_depth;
  lo.alpha = cfg.stabilization.alpha;
  sys.F_s = spatial_load(sys, grid, cfg.source, lo);
  return {std::move(grid), std::move(dofs), std::move(sys)};
}

double critical_dt(const Discretization& d, const BenchmarkConfig& cfg) {
  switch (cfg.integrator.kind) {
    case Integrator::Newmark:
      if (cfg.integrator.beta >= 0.25) return std::numeric_limits<double>::infinity();
      [[fallthrough]];
    case Integrator::CDM:
      return dt_crit_from_lambda(
          max_gen_eig(d.sys.K, d.sys.M, cfg.power_tol, cfg.power_max_iter, cfg.seed).lambda);
    case Integrator::IMEX: {
      const std::vector<int>& dd = d.sys.partition.d_set;
      if (dd.empty()) return std::numeric_limits<double>::infinity();
      return dt_crit_from_lambda(max_gen_eig(submatrix(d.sys.K, dd, dd),
                                             submatrix(d.sys.M, dd, dd), cfg.power_tol,
                                             cfg.power_max_iter, cfg.seed)
                                     .lambda);
    }
  }
  return 0.0;
}

int choose_n_t(const BenchmarkConfig& cfg, double dt_bound) {
  if (cfg.integrator.n_t > 0) return cfg.integrator.n_t;
  if (!std::isfinite(dt_bound)) return cfg.n_s;
  const double m = std::ceil(cfg.T / (dt_bound * cfg.n_s) * (1.0 - 1e-12));
  if (!(m < 1e9)) throw ConfigError("choose_n_t: step count overflow");
  return cfg.n_s * std::max(1, static_cast<int>(m));
}

std::string method_label(const BenchmarkConfig& cfg) {
  std::string s = cfg.spec.family == BasisFamily::GllLagrange ? "scm" : "iga";
  if (cfg.boundary_fitted) s += "-bf";
  s += std::string("-") + to_string(cfg.integrator.kind);
  if (cfg.stabilization.lumping != Lumping::None)
    s += std::string("-") + to_string(cfg.stabilization.lumping);
  if (cfg.stabilization.epsilon > 0.0) s += "-evs";
  return s;
}

namespace {

Trajectory integrate(const BenchmarkConfig& cfg, const Discretization& d, double dt, int n_t,
                     const Sampling& sampling) {
  const Forcing F = Forcing::ricker(d.sys.F_s, cfg.source.f_e);
  const State s0 = State::zero(d.sys.n_dof);
  std::optional<TensorGridStiffness> tensor;
  if (cfg.boundary_fitted && cfg.spec.family == BasisFamily::GllLagrange)
    tensor.emplace(d.grid, cfg.material);
  StiffnessApply K_apply = [&d](const VectorXd& x, VectorXd& y) { spmv(d.sys.K, x, y); };
  if (tensor) K_apply = [&tensor](const VectorXd& x, VectorXd& y) { tensor->apply(x, y); };
  switch (cfg.integrator.kind) {
    case Integrator::CDM: return cdm_run(d.sys.M, K_apply, dt, n_t, F, s0, &sampling);
    case Integrator::Newmark:
      return newmark_run(d.sys.M, d.sys.K, K_apply,
                         {cfg.integrator.beta, cfg.integrator.gamma, dt, n_t}, F, s0, &sampling);
    case Integrator::IMEX:
      return imex_run(d.sys.M, d.sys.K, d.sys.partition, dt, n_t, F, s0, &sampling,
                      cfg.integrator.beta, cfg.integrator.gamma);
  }
  throw ConfigError("unknown integrator");
}

}  // namespace

RunResult simulate(const BenchmarkConfig& cfg, const Discretization& d, double dt_crit) {
  const double bound = std::isfinite(dt_crit) ? select_dt(dt_crit, cfg.integrator.dt_max)
                                              : cfg.integrator.dt_max;
  const int n_t = choose_n_t(cfg, bound);
  const double dt = cfg.T / n_t;
  Sampling sampling{observation_matrix(d.grid, d.dofs, ObserverSet::benchmark(cfg.l_p).positions()), 1};
  const Trajectory traj = integrate(cfg, d, dt, n_t, sampling);

  RunResult r;
  r.signals = sample_observers(traj, cfg.n_s, cfg.T);
  BenchmarkReport& rep = r.report;
  rep.method = method_label(cfg);
  rep.p = cfg.spec.p;
  rep.n_e = cfg.spec.n_e;
  rep.n_dof = d.sys.n_dof;
  rep.n_c = static_cast<int>(d.sys.partition.c_set.size());
  rep.dt_crit = dt_crit;
  rep.dt_used = dt;
  rep.n_t = n_t;
  rep.timings = traj.timings;
  rep.seed = cfg.seed;
  rep.boundary_fitted = cfg.boundary_fitted;
  rep.alpha = cfg.stabilization.alpha;
  rep.epsilon = cfg.stabilization.epsilon;
  rep.f_lambda = cfg.stabilization.f_lambda;
  rep.lumping = to_string(cfg.stabilization.lumping);
  rep.integrator = to_string(cfg.integrator.kind);
  rep.family = to_string(cfg.spec.family);
  return r;
}

RunResult simulate(const BenchmarkConfig& cfg) {
  const Discretization d = discretize(cfg);
  return simulate(cfg, d, critical_dt(d, cfg));
}

SignalMatrix reference_run(const BenchmarkConfig& cfg) {
  cfg.validate();
  const ReferenceConfig& rc = cfg.reference;
  const double steps = cfg.T / rc.dt;
  const int n_t = static_cast<int>(std::llround(steps));
  if (n_t < 1 || std::abs(steps - n_t) > 1e-9 * steps)
    throw ConfigError("reference: T / dt must be an integer");
  const Grid grid =
      Grid::boundary_fitted(cfg.l_p, BasisSpec{BasisFamily::GllLagrange, rc.p, rc.n_e});
  AssemblyOptions opts;
  opts.assemble_stiffness = false;
  opts.material = cfg.material;
  DiscreteSystem sys = assemble(grid, opts);
  LoadOptions lo = cfg.load;
  sys.F_s = spatial_load(sys, grid, cfg.source, lo);
  const TensorGridStiffness K(grid, cfg.material);

  const Factorization Mf = Factorization::factorize(sys.M);
  const double lambda =
      max_gen_eig(K, Mf, [&sys](const VectorXd& x, VectorXd& y) { spmv(sys.M, x, y); },
                  cfg.power_tol, cfg.power_max_iter, cfg.seed)
          .lambda;
  const double dtc = dt_crit_from_lambda(lambda);
  if (rc.dt >= dtc)
    throw ConfigError("reference: dt = " + std::to_string(rc.dt) +
                      " exceeds the critical step " + std::to_string(dtc));

  const DofMap dofs(grid);
  Sampling sampling{observation_matrix(grid, dofs, ObserverSet::benchmark(cfg.l_p).positions()), 1};
  const Trajectory traj =
      cdm_run(sys.M, [&K](const VectorXd& x, VectorXd& y) { K.apply(x, y); }, rc.dt, n_t,
              Forcing::ricker(sys.F_s, cfg.source.f_e), State::zero(sys.n_dof), &sampling);
  return sample_observers(traj, n_t, cfg.T);
}

SignalMatrix load_or_compute_reference(const BenchmarkConfig& cfg) {
  const std::string& path = cfg.reference.csv;
  if (!path.empty() && std::filesystem::exists(path)) return SignalMatrix::read_csv(path);
  SignalMatrix ref = reference_run(cfg);
  if (!path.empty()) ref.write_csv(path);
  return ref;
}

int dof_count(const BenchmarkConfig& cfg) {
  cfg.validate();
  if (cfg.boundary_fitted) return dof_count_boundary_fitted(cfg.spec);
  return dof_count(cfg.spec, cfg.geometry(), cfg.discard_depth);
}

// --------------------------------------------------------------- report

namespace {

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

std::string BenchmarkReport::to_json_text() const {
  json j;
  j["method"] = method;
  j["p"] = p;
  j["n_e"] = n_e;
  j["n_dof"] = n_dof;
  j["n_c"] = n_c;
  j["dt_crit"] = number_or_null(dt_crit);
  j["dt_used"] = dt_used;
  j["n_t"] = n_t;
  j["error"] = error ? json(*error) : json(nullptr);
  j["timings"] = {{"factorization", timings.factorization},
                  {"rhs", timings.rhs},
                  {"backward_insertion", timings.backward_insertion}};
  j["metadata"] = {{"seed", seed},         {"boundary_fitted", boundary_fitted},
                   {"alpha", alpha},       {"epsilon", epsilon},
                   {"f_lambda", f_lambda}, {"lumping", lumping},
                   {"integrator", integrator}, {"family", family}};
  return j.dump(2);
}

BenchmarkReport BenchmarkReport::from_json_text(const std::string& text) {
  BenchmarkReport r;
  try {
    const json j = json::parse(text);
    r.method = j.at("method").get<std::string>();
    r.p = j.at("p").get<int>();
    r.n_e = j.at("n_e").get<int>();
    r.n_dof = j.at("n_dof").get<int>();
    r.n_c = j.at("n_c").get<int>();
    r.dt_crit = number_or_inf(j.at("dt_crit"));
    r.dt_used = j.at("dt_used").get<double>();
    r.n_t = j.at("n_t").get<int>();
    if (!j.at("error").is_null()) r.error = j.at("error").get<double>();
    const json& t = j.at("timings");
    r.timings = {t.at("factorization").get<double>(), t.at("rhs").get<double>(),
                 t.at("backward_insertion").get<double>()};
    const json& m = j.at("metadata");
    r.seed = m.at("seed").get<std::uint64_t>();
    r.boundary_fitted = m.at("boundary_fitted").get<bool>();
    r.alpha = m.at("alpha").get<double>();
    r.epsilon = m.at("epsilon").get<double>();
    r.f_lambda = m.at("f_lambda").get<double>();
    r.lumping = m.at("lumping").get<std::string>();
    r.integrator = m.at("integrator").get<std::string>();
    r.family = m.at("family").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return r;
}

}  // namespace fcmwave
