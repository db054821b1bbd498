#include "fcmwave/timeint.hpp"

#include <chrono>
#include <cmath>

#include "fcmwave/errors.hpp"

namespace fcmwave {

using Eigen::VectorXd;
using Clock = std::chrono::steady_clock;

const char* to_string(Integrator i) {
  switch (i) {
    case Integrator::CDM: return "cdm";
    case Integrator::Newmark: return "newmark";
    case Integrator::IMEX: return "imex";
  }
  return "?";
}

Integrator integrator_from_string(const std::string& s) {
  if (s == "cdm") return Integrator::CDM;
  if (s == "newmark") return Integrator::Newmark;
  if (s == "imex") return Integrator::IMEX;
  throw ConfigError("unknown integrator '" + s + "' (expected cdm|newmark|imex)");
}

void NewmarkParams::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (n_t < 0) throw ConfigError("n_t must be >= 0");
  if (!(beta >= 0.0 && beta <= 0.5)) throw ConfigError("beta must lie in [0, 1/2]");
  if (!(gamma >= 0.5 && gamma <= 1.0)) throw ConfigError("gamma must lie in [1/2, 1]");
}

State State::zero(Eigen::Index n) {
  return {VectorXd::Zero(n), VectorXd::Zero(n), VectorXd::Zero(n)};
}

Forcing Forcing::ricker(const VectorXd& F_s, double f_e) {
  return {F_s, [f_e](double t) { return fcmwave::ricker(t, f_e); }};
}

void Forcing::eval(double t, Eigen::Index n, VectorXd& y) const {
  if (!active()) {
    y.setZero(n);
    return;
  }
  y = amplitude(t) * shape;
}

double select_dt(double dt_crit, double dt_max) {
  if (!(dt_crit > 0.0) || !(dt_max > 0.0)) throw ConfigError("select_dt: non-positive input");
  return std::min(0.9 * dt_crit, dt_max);
}

SparseSym submatrix(const SparseSym& A, const std::vector<int>& rows,
                    const std::vector<int>& cols) {
  std::vector<int> col_map(static_cast<std::size_t>(A.cols()), -1);
  for (std::size_t j = 0; j < cols.size(); ++j) col_map[static_cast<std::size_t>(cols[j])] = static_cast<int>(j);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (SparseSym::InnerIterator it(A, rows[i]); it; ++it) {
      const int j = col_map[static_cast<std::size_t>(it.col())];
      if (j >= 0) t.emplace_back(static_cast<int>(i), j, it.value());
    }
  SparseSym S(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_divergence(const VectorXd& x, int step) {
  const double n = x.lpNorm<Eigen::Infinity>();
  if (!(n <= kDivergenceLimit)) throw DivergenceError(step, n);
}

class Recorder {
public:
  Recorder(const Sampling* s, int n_t, double dt) : s_(s), dt_(dt) {
    if (!s_) return;
    if (s_->every < 1) throw ConfigError("sampling interval must be >= 1");
    const int count = n_t / s_->every + 1;
    times_.resize(count);
    samples_.resize(s_->H.rows(), count);
  }
  void record(int step, const VectorXd& x) {
    if (!s_ || step % s_->every != 0) return;
    const int j = step / s_->every;
    times_[j] = step * dt_;
    samples_.col(j) = s_->H * x;
  }
  void finish(Trajectory& t) {
    t.times = std::move(times_);
    t.samples = std::move(samples_);
  }

private:
  const Sampling* s_;
  double dt_;
  VectorXd times_;
  Eigen::MatrixXd samples_;
};

void check_initial(const State& s, Eigen::Index n) {
  if (s.Psi.size() != n || s.Psi_dot.size() != n)
    throw ConfigError("initial state dimension mismatch");
}

}  // namespace

Trajectory newmark_run(const SparseSym& M, const SparseSym& K, const NewmarkParams& params,
                       const Forcing& F, const State& initial, const Sampling* sampling) {
  return newmark_run(
      M, K, [&K](const VectorXd& x, VectorXd& y) { spmv(K, x, y); }, params, F, initial,
      sampling);
}

Trajectory newmark_run(const SparseSym& M, const SparseSym& K, const StiffnessApply& K_apply,
                       const NewmarkParams& params, const Forcing& F, const State& initial,
                       const Sampling* sampling) {
  params.validate();
  const Eigen::Index n = M.rows();
  if (K.rows() != n) throw ConfigError("newmark_run: M/K dimension mismatch");
  check_initial(initial, n);
  const double dt = params.dt, beta = params.beta, gamma = params.gamma;
  Trajectory out;
  Recorder rec(sampling, params.n_t, dt);

  auto t0 = Clock::now();
  const SparseSym S = beta > 0.0 ? SparseSym(M + (beta * dt * dt) * K) : M;
  const Factorization Sf = Factorization::factorize(S);
  out.timings.factorization += seconds_since(t0);

  VectorXd u = initial.Psi, v = initial.Psi_dot, a(n), f(n), Ku(n), r(n);
  F.eval(0.0, n, f);
  K_apply(u, Ku);
  r = f - Ku;
  if (r.isZero(0.0)) {
    a.setZero();
  } else if (beta == 0.0) {
    a = Sf.solve(r);
  } else {
    t0 = Clock::now();
    const Factorization Mf = Factorization::factorize(M);
    out.timings.factorization += seconds_since(t0);
    a = Mf.solve(r);
  }
  rec.record(0, u);

  for (int k = 0; k < params.n_t; ++k) {
    t0 = Clock::now();
    u += dt * v + ((0.5 - beta) * dt * dt) * a;
    v += ((1.0 - gamma) * dt) * a;
    F.eval((k + 1) * dt, n, f);
    K_apply(u, Ku);
    r = f - Ku;
    out.timings.rhs += seconds_since(t0);

    t0 = Clock::now();
    Sf.solve_in_place(r);
    a = r;
    out.timings.backward_insertion += seconds_since(t0);

    t0 = Clock::now();
    v += (gamma * dt) * a;
    u += (beta * dt * dt) * a;
    out.timings.rhs += seconds_since(t0);
    check_divergence(u, k + 1);
    rec.record(k + 1, u);
  }
  out.final_state = {u, v, a};
  out.steps = params.n_t;
  rec.finish(out);
  return out;
}

Trajectory newmark_run(const DiscreteSystem& sys, const NewmarkParams& params,
                       const Forcing& F, const State& initial, const Sampling* sampling) {
  if (sys.K.rows() != sys.n_dof) throw ConfigError("newmark_run: system has no stiffness");
  return newmark_run(sys.M, sys.K, params, F, initial, sampling);
}

Trajectory cdm_run(const SparseSym& M, const StiffnessApply& K, double dt, int n_t,
                   const Forcing& F, const State& initial, const Sampling* sampling) {
  NewmarkParams{0.0, 0.5, dt, n_t}.validate();
  const Eigen::Index n = M.rows();
  check_initial(initial, n);
  Trajectory out;
  Recorder rec(sampling, n_t, dt);

  auto t0 = Clock::now();
  const bool diagonal = is_structurally_diagonal(M);
  const Factorization Mf = Factorization::factorize(M);
  if (!diagonal) out.timings.factorization += seconds_since(t0);

  VectorXd u = initial.Psi, u_prev(n), a(n), f(n), Ku(n);
  F.eval(0.0, n, f);
  K(u, Ku);
  a = Mf.solve(f - Ku);
  u_prev = u - dt * initial.Psi_dot + (0.5 * dt * dt) * a;
  rec.record(0, u);

  for (int k = 0; k < n_t; ++k) {
    t0 = Clock::now();
    F.eval(k * dt, n, f);
    K(u, Ku);
    a = f - Ku;
    out.timings.rhs += seconds_since(t0);

    t0 = Clock::now();
    Mf.solve_in_place(a);
    out.timings.backward_insertion += seconds_since(t0);

    t0 = Clock::now();
    // u_prev <- u_{k+1}, then swap so u holds the newest step.
    u_prev = 2.0 * u - u_prev + (dt * dt) * a;
    u.swap(u_prev);
    out.timings.rhs += seconds_since(t0);
    check_divergence(u, k + 1);
    rec.record(k + 1, u);
  }
  F.eval(n_t * dt, n, f);
  K(u, Ku);
  a = Mf.solve(f - Ku);
  out.final_state = {u, (u - u_prev) / dt + (0.5 * dt) * a, a};
  out.steps = n_t;
  rec.finish(out);
  return out;
}

Trajectory cdm_run(const DiscreteSystem& sys, double dt, int n_t, const Forcing& F,
                   const State& initial, const Sampling* sampling) {
  if (sys.K.rows() != sys.n_dof) throw ConfigError("cdm_run: system has no stiffness");
  const SparseSym& K = sys.K;
  return cdm_run(
      sys.M, [&K](const VectorXd& x, VectorXd& y) { spmv(K, x, y); }, dt, n_t, F, initial,
      sampling);
}

Trajectory imex_run(const SparseSym& M, const SparseSym& K, const DofPartition& part,
                    double dt, int n_t, const Forcing& F, const State& initial,
                    const Sampling* sampling, double beta, double gamma) {
  NewmarkParams{beta, gamma, dt, n_t}.validate();
  const Eigen::Index n = M.rows();
  check_initial(initial, n);
  const std::vector<int>& d = part.d_set;
  const std::vector<int>& c = part.c_set;
  if (static_cast<Eigen::Index>(d.size() + c.size()) != n)
    throw ConfigError("imex_run: partition does not cover all DOFs");
  const Eigen::Index nd = static_cast<Eigen::Index>(d.size());
  const Eigen::Index nc = static_cast<Eigen::Index>(c.size());

  std::vector<int> all(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = static_cast<int>(i);
  const SparseSym Mdd = submatrix(M, d, d);
  if (!is_structurally_diagonal(Mdd))
    throw ConfigError("imex_run: M^dd is not diagonal (IMEX needs GLL-Lagrange uncut mass)");
  if (submatrix(M, d, c).nonZeros() != 0)
    throw ConfigError("imex_run: mass couples the explicit and implicit sets");
  const SparseSym Kd = submatrix(K, d, all);
  const SparseSym Kc = submatrix(K, c, all);
  const SparseSym Mcc = submatrix(M, c, c);
  const SparseSym Kcc = submatrix(K, c, c);
  VectorXd inv_mdd = Mdd.diagonal();
  for (Eigen::Index i = 0; i < nd; ++i)
    if (!(inv_mdd[i] > 0.0))
      throw FactorizationError("imex_run: non-positive diagonal mass entry");
  inv_mdd = inv_mdd.cwiseInverse();

  Trajectory out;
  Recorder rec(sampling, n_t, dt);
  auto t0 = Clock::now();
  Factorization Sf, Mf;
  if (nc > 0) {
    Sf = Factorization::factorize(SparseSym(Mcc + (beta * dt * dt) * Kcc));
    Mf = Factorization::factorize(Mcc);
  }
  out.timings.factorization += seconds_since(t0);

  auto gather = [](const VectorXd& x, const std::vector<int>& idx) {
    VectorXd y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) y[static_cast<Eigen::Index>(i)] = x[idx[i]];
    return y;
  };
  auto scatter = [](const VectorXd& y, const std::vector<int>& idx, VectorXd& x) {
    for (std::size_t i = 0; i < idx.size(); ++i) x[idx[i]] = y[static_cast<Eigen::Index>(i)];
  };

  VectorXd u = initial.Psi, f(n);
  VectorXd ud = gather(u, d), ud_prev(nd), rd(nd);
  VectorXd uc = gather(u, c), vc = gather(initial.Psi_dot, c), ac(nc), rc(nc);
  F.eval(0.0, n, f);
  {
    rd = gather(f, d) - Kd * u;
    const VectorXd ad0 = inv_mdd.cwiseProduct(rd);
    ud_prev = ud - dt * gather(initial.Psi_dot, d) + (0.5 * dt * dt) * ad0;
    if (nc > 0) {
      rc = gather(f, c) - Kc * u;
      ac = rc.isZero(0.0) ? VectorXd::Zero(nc) : Mf.solve(rc);
    }
  }
  rec.record(0, u);

  VectorXd fk(n), fk1(n);
  for (int k = 0; k < n_t; ++k) {
    // Explicit step on d.
    t0 = Clock::now();
    F.eval(k * dt, n, fk);
    rd = gather(fk, d) - Kd * u;
    out.timings.rhs += seconds_since(t0);
    t0 = Clock::now();
    rd.array() *= inv_mdd.array();
    out.timings.backward_insertion += seconds_since(t0);
    t0 = Clock::now();
    ud_prev = 2.0 * ud - ud_prev + (dt * dt) * rd;
    ud.swap(ud_prev);
    scatter(ud, d, u);

    // Implicit step on c.
    if (nc > 0) {
      uc += dt * vc + ((0.5 - beta) * dt * dt) * ac;
      vc += ((1.0 - gamma) * dt) * ac;
      scatter(uc, c, u);
      F.eval((k + 1) * dt, n, fk1);
      rc = gather(fk1, c) - Kc * u;
    }
    out.timings.rhs += seconds_since(t0);
    if (nc > 0) {
      t0 = Clock::now();
      Sf.solve_in_place(rc);
      ac = rc;
      out.timings.backward_insertion += seconds_since(t0);
      t0 = Clock::now();
      vc += (gamma * dt) * ac;
      uc += (beta * dt * dt) * ac;
      scatter(uc, c, u);
      out.timings.rhs += seconds_since(t0);
    }
    check_divergence(u, k + 1);
    rec.record(k + 1, u);
  }

  State fin = State::zero(n);
  fin.Psi = u;
  F.eval(n_t * dt, n, f);
  rd = inv_mdd.cwiseProduct(gather(f, d) - Kd * u);
  scatter(rd, d, fin.Psi_ddot);
  scatter(VectorXd((ud - ud_prev) / dt + (0.5 * dt) * rd), d, fin.Psi_dot);
  if (nc > 0) {
    scatter(ac, c, fin.Psi_ddot);
    scatter(vc, c, fin.Psi_dot);
  }
  out.final_state = std::move(fin);
  out.steps = n_t;
  rec.finish(out);
  return out;
}

Trajectory imex_run(const DiscreteSystem& sys, double dt, int n_t, const Forcing& F,
                    const State& initial, const Sampling* sampling) {
  if (sys.K.rows() != sys.n_dof) throw ConfigError("imex_run: system has no stiffness");
  return imex_run(sys.M, sys.K, sys.partition, dt, n_t, F, initial, sampling);
}

}  // namespace fcmwave
