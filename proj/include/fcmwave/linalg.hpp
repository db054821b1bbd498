#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fcmwave/errors.hpp"

namespace fcmwave {

using Eigen::VectorXd;

/// Symmetric sparse matrix in CSR form (row-major compressed storage, sorted
/// column indices, no duplicates). Both triangles are stored.
using SparseSym = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

inline VectorXd spmv(const SparseSym& A, const VectorXd& x) {
  if (A.cols() != x.size()) throw ConfigError("spmv: dimension mismatch");
  return A * x;
}

/// y = A x without allocating.
inline void spmv(const SparseSym& A, const VectorXd& x, VectorXd& y) {
  y.noalias() = A * x;
}

bool is_structurally_diagonal(const SparseSym& A);
bool is_structurally_symmetric(const SparseSym& A);

/// Largest |A - A^T| entry.
double symmetry_defect(const SparseSym& A);

/// Cholesky factorization of a symmetric positive definite matrix with an
/// approximate-minimum-degree ordering. Structurally diagonal inputs take a
/// fast path that stores the reciprocal diagonal.
class Factorization {
public:
  static Factorization factorize(const SparseSym& A);

  /// Empty factorization of a 0x0 matrix.
  Factorization();
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;
  ~Factorization();

  VectorXd solve(const VectorXd& b) const;
  void solve_in_place(VectorXd& b) const;

  bool is_diagonal() const { return impl_ == nullptr; }
  Eigen::Index rows() const { return n_; }

private:

  struct Impl;
  std::unique_ptr<Impl> impl_;
  VectorXd inv_diag_;
  Eigen::Index n_ = 0;
};

struct EigenEstimate {
  double lambda = 0.0;
  int iterations = 0;
};

inline constexpr std::uint64_t kDefaultPowerSeed = 20240521ULL;

/// Largest eigenvalue of K v = lambda M v by power iteration on M^{-1} K
/// with Rayleigh-quotient estimates. `KOp` provides `apply(x, y)` (y = K x)
/// and `rows()`. Stops when the relative change of the estimate drops below
/// tol; throws IterationLimitError after max_iter iterations.
template <typename KOp>
EigenEstimate max_gen_eig(const KOp& K, const Factorization& M_factor,
                          const std::function<void(const VectorXd&, VectorXd&)>& M_apply,
                          double tol, int max_iter, std::uint64_t seed) {
  const Eigen::Index n = K.rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  VectorXd x(n), Kx(n), Mx(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
  double previous = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    M_apply(x, Mx);
    const double xMx = x.dot(Mx);
    x /= std::sqrt(xMx);
    K.apply(x, Kx);
    const double lambda = x.dot(Kx);
    if (!std::isfinite(lambda))
      throw EigenSolverError("max_gen_eig: non-finite Rayleigh quotient");
    if (it > 1 && std::abs(lambda - previous) <= tol * std::abs(lambda))
      return {lambda, it};
    previous = lambda;
    x = M_factor.solve(Kx);
  }
  throw IterationLimitError("max_gen_eig: no convergence within " +
                            std::to_string(max_iter) + " iterations");
}

/// Sparse-matrix operator wrapper for max_gen_eig.
struct SparseOperator {
  const SparseSym& A;
  Eigen::Index rows() const { return A.rows(); }
  void apply(const VectorXd& x, VectorXd& y) const { spmv(A, x, y); }
};

EigenEstimate max_gen_eig(const SparseSym& K, const SparseSym& M,
                          double tol = 1e-9, int max_iter = 200000,
                          std::uint64_t seed = kDefaultPowerSeed);

/// Critical CDM step 2 / sqrt(lambda_max).
inline double dt_crit_from_lambda(double lambda_max) {
  return 2.0 / std::sqrt(lambda_max);
}

double dt_crit(const SparseSym& K, const SparseSym& M, double tol = 1e-9,
               std::uint64_t seed = kDefaultPowerSeed);

/// Eigen-decomposition of a small dense symmetric matrix: A = V diag(d) V^T
/// with eigenvalues in increasing order.
template <typename Scalar>
struct SymmetricEigen {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
};

/// Cyclic Jacobi on the symmetrized input (A + A^T) / 2. A sweep that
/// performs no rotation terminates; exceeding max_sweeps throws
/// EigenSolverError.
template <typename Derived>
SymmetricEigen<typename Derived::Scalar> jacobi_eig(
    const Eigen::MatrixBase<Derived>& A_in, int max_sweeps = 100) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A_in.rows() != A_in.cols()) throw ConfigError("jacobi_eig: not square");
  const Eigen::Index n = A_in.rows();
  Mat A = (A_in + A_in.transpose()) / Scalar(2);
  Mat V = Mat::Identity(n, n);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar scale = A.cwiseAbs().maxCoeff();

  bool converged = n <= 1 || scale == Scalar(0);
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = A(p, q);
        const Scalar app = A(p, p), aqq = A(q, q);
        // Negligible relative to both diagonals and to the matrix scale.
        if (std::abs(apq) <= eps * std::sqrt(std::abs(app * aqq)) ||
            std::abs(apq) <= eps * eps * scale) {
          A(p, q) = A(q, p) = 0;
          continue;
        }
        rotated = true;
        const Scalar theta = (aqq - app) / (2 * apq);
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1));
        const Scalar c = 1 / std::sqrt(t * t + 1);
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        A(p, q) = A(q, p) = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged)
    throw EigenSolverError("jacobi_eig: no convergence after " +
                           std::to_string(max_sweeps) + " sweeps");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return A(a, a) < A(b, b); });
  SymmetricEigen<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    out.values[i] = A(src, src);
    out.vectors.col(i) = V.col(src);
  }
  return out;
}

/// MatrixMarket coordinate/real/symmetric I/O (lower triangle on disk).
void write_matrix_market(const std::string& path, const SparseSym& A);
SparseSym read_matrix_market(const std::string& path);
/// MatrixMarket array/real/general for a dense vector.
void write_matrix_market(const std::string& path, const VectorXd& v);

}  // namespace fcmwave
