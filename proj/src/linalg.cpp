#include "fcmwave/linalg.hpp"

#include <Eigen/CholmodSupport>

namespace fcmwave {

bool is_structurally_diagonal(const SparseSym& A) {
  for (int r = 0; r < A.outerSize(); ++r)
    for (SparseSym::InnerIterator it(A, r); it; ++it)
      if (it.col() != r) return false;
  return true;
}

bool is_structurally_symmetric(const SparseSym& A) {
  if (A.rows() != A.cols()) return false;
  const SparseSym At = A.transpose();
  if (At.nonZeros() != A.nonZeros()) return false;
  for (int r = 0; r < A.outerSize(); ++r) {
    SparseSym::InnerIterator a(A, r), b(At, r);
    for (; a && b; ++a, ++b)
      if (a.col() != b.col()) return false;
    if (a || b) return false;
  }
  return true;
}

double symmetry_defect(const SparseSym& A) {
  const SparseSym D = A - SparseSym(A.transpose());
  double m = 0.0;
  for (int r = 0; r < D.outerSize(); ++r)
    for (SparseSym::InnerIterator it(D, r); it; ++it)
      m = std::max(m, std::abs(it.value()));
  return m;
}

struct Factorization::Impl {
  Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt;
};

Factorization::Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;
Factorization::~Factorization() = default;

Factorization Factorization::factorize(const SparseSym& A) {
  if (A.rows() != A.cols()) throw ConfigError("factorize: matrix not square");
  Factorization f;
  f.n_ = A.rows();
  if (is_structurally_diagonal(A)) {
    const VectorXd d = A.diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (!(d[i] > 0.0))
        throw FactorizationError("factorize: non-positive pivot " +
                                 std::to_string(d[i]) + " at row " +
                                 std::to_string(i) +
                                 " (matrix is not positive definite)");
    f.inv_diag_ = d.cwiseInverse();
    return f;
  }
  f.impl_ = std::make_unique<Impl>();
  f.impl_->llt.cholmod().print = 0;
  f.impl_->llt.compute(Eigen::SparseMatrix<double>(A));
  if (f.impl_->llt.info() != Eigen::Success)
    throw FactorizationError(
        "factorize: Cholesky failed (matrix is not positive definite)");
  return f;
}

VectorXd Factorization::solve(const VectorXd& b) const {
  if (b.size() != n_) throw ConfigError("solve: dimension mismatch");
  if (!impl_) return inv_diag_.cwiseProduct(b);
  return impl_->llt.solve(b);
}

void Factorization::solve_in_place(VectorXd& b) const {
  if (!impl_)
    b.array() *= inv_diag_.array();
  else
    b = impl_->llt.solve(b);
}

EigenEstimate max_gen_eig(const SparseSym& K, const SparseSym& M, double tol,
                          int max_iter, std::uint64_t seed) {
  if (K.rows() != M.rows()) throw ConfigError("max_gen_eig: dimension mismatch");
  const Factorization Mf = Factorization::factorize(M);
  return max_gen_eig(
      SparseOperator{K}, Mf,
      [&M](const VectorXd& x, VectorXd& y) { spmv(M, x, y); }, tol, max_iter,
      seed);
}

double dt_crit(const SparseSym& K, const SparseSym& M, double tol,
               std::uint64_t seed) {
  return dt_crit_from_lambda(max_gen_eig(K, M, tol, 200000, seed).lambda);
}

}  // namespace fcmwave
