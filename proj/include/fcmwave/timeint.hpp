#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fcmwave/assembly.hpp"
#include "fcmwave/linalg.hpp"

namespace fcmwave {

enum class Integrator { CDM, Newmark, IMEX };

const char* to_string(Integrator i);
Integrator integrator_from_string(const std::string& s);

struct NewmarkParams {
  double beta = 0.25;
  double gamma = 0.5;
  double dt = 0.0;
  int n_t = 0;

  void validate() const;
};

struct State {
  Eigen::VectorXd Psi, Psi_dot, Psi_ddot;

  static State zero(Eigen::Index n);
};

struct StageTimings {
  double factorization = 0.0;
  double rhs = 0.0;
  double backward_insertion = 0.0;

  double total() const { return factorization + rhs + backward_insertion; }
};

/// Space-time separable load F(t) = amplitude(t) * shape. An empty shape
/// means no load.
struct Forcing {
  Eigen::VectorXd shape;
  std::function<double(double)> amplitude;

  static Forcing none() { return {}; }
  static Forcing ricker(const Eigen::VectorXd& F_s, double f_e);
  bool active() const { return shape.size() > 0; }
  /// y = F(t); zero when inactive.
  void eval(double t, Eigen::Index n, Eigen::VectorXd& y) const;
};

/// Observer sampling: rows of H are evaluated at every `every`-th step,
/// including step 0.
struct Sampling {
  Eigen::SparseMatrix<double, Eigen::RowMajor> H;
  int every = 1;
};

struct Trajectory {
  Eigen::VectorXd times;    // sampled times
  Eigen::MatrixXd samples;  // rows: observers, cols: sampled times
  State final_state;
  StageTimings timings;
  int steps = 0;
};

/// Divergence threshold on |Psi|_inf.
inline constexpr double kDivergenceLimit = 1e12;

/// Anything providing `rows()` and `apply(x, y)` with y = K x.
using StiffnessApply = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Implicit/explicit Newmark predictor-corrector on the full system. The
/// initial acceleration comes from M Psi_ddot_0 = F_0 - K Psi_0.
Trajectory newmark_run(const SparseSym& M, const SparseSym& K, const NewmarkParams& params,
                       const Forcing& F, const State& initial,
                       const Sampling* sampling = nullptr);
/// As above with K x supplied by `K_apply`; K itself is only factorized.
Trajectory newmark_run(const SparseSym& M, const SparseSym& K, const StiffnessApply& K_apply,
                       const NewmarkParams& params, const Forcing& F, const State& initial,
                       const Sampling* sampling = nullptr);
Trajectory newmark_run(const DiscreteSystem& sys, const NewmarkParams& params,
                       const Forcing& F, const State& initial,
                       const Sampling* sampling = nullptr);

/// Central differences in two-step form with a second-order Taylor start
/// for Psi_{-1}. Diagonal M is inverted componentwise.
Trajectory cdm_run(const SparseSym& M, const StiffnessApply& K, double dt, int n_t,
                   const Forcing& F, const State& initial,
                   const Sampling* sampling = nullptr);
Trajectory cdm_run(const DiscreteSystem& sys, double dt, int n_t, const Forcing& F,
                   const State& initial, const Sampling* sampling = nullptr);

/// Explicit CDM on the d-set, trapezoidal Newmark on the c-set. Requires a
/// diagonal M^dd and no mass coupling between the sets.
Trajectory imex_run(const SparseSym& M, const SparseSym& K, const DofPartition& part,
                    double dt, int n_t, const Forcing& F, const State& initial,
                    const Sampling* sampling = nullptr, double beta = 0.25,
                    double gamma = 0.5);
Trajectory imex_run(const DiscreteSystem& sys, double dt, int n_t, const Forcing& F,
                    const State& initial, const Sampling* sampling = nullptr);

/// min(0.9 dt_crit, dt_max); pass infinity for unconditionally stable schemes.
double select_dt(double dt_crit, double dt_max);

/// Rows/columns of A restricted to the given index sets (both sorted).
SparseSym submatrix(const SparseSym& A, const std::vector<int>& rows,
                    const std::vector<int>& cols);

}  // namespace fcmwave
