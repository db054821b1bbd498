#pragma once

#include <Eigen/Core>
#include <string>

#include "fcmwave/basis.hpp"
#include "fcmwave/geometry.hpp"
#include "fcmwave/linalg.hpp"

namespace fcmwave {

enum class Lumping { None, RowSum, HRZ };

const char* to_string(Lumping l);
Lumping lumping_from_string(const std::string& s);

struct StabilizationParams {
  double alpha = 1e-8;
  double epsilon = 0.0;
  double f_lambda = 1e-2;
  Lumping lumping = Lumping::None;

  /// Throws ConfigError on out-of-range values, including epsilon > 0 with
  /// alpha == 0.
  void validate() const;
};

/// M_e = M_o + alpha (M_f - M_o).
template <typename DerivedO, typename DerivedF>
auto alpha_combine(const Eigen::MatrixBase<DerivedO>& M_o,
                   const Eigen::MatrixBase<DerivedF>& M_f,
                   typename DerivedO::Scalar alpha) {
  using Mat = Eigen::Matrix<typename DerivedO::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (M_o.rows() != M_f.rows() || M_o.cols() != M_f.cols())
    throw ConfigError("alpha_combine: shape mismatch");
  return Mat(M_o + alpha * (M_f - M_o));
}

/// Split of the original element mass spectrum at f_lambda * lambda_max.
template <typename Scalar>
struct EvsDecomposition {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Mat Phi_s, Phi_l;
  Vec Lambda_s, Lambda_l;
};

template <typename Derived>
EvsDecomposition<typename Derived::Scalar> evs_decompose(
    const Eigen::MatrixBase<Derived>& M_o, typename Derived::Scalar f_lambda) {
  using Scalar = typename Derived::Scalar;
  const SymmetricEigen<Scalar> eig = jacobi_eig(M_o);
  const Eigen::Index n = eig.values.size();
  const Scalar threshold = f_lambda * eig.values[n - 1];
  Eigen::Index n_small = 0;
  while (n_small < n && eig.values[n_small] < threshold) ++n_small;
  EvsDecomposition<Scalar> d;
  d.Phi_s = eig.vectors.leftCols(n_small);
  d.Phi_l = eig.vectors.rightCols(n - n_small);
  d.Lambda_s = eig.values.head(n_small);
  d.Lambda_l = eig.values.tail(n - n_small);
  return d;
}

/// Eigenvalue stabilization: M_e = M_o + eps * max|M_f| / max|Phi_s Phi_s^T|
/// * Phi_s Phi_s^T, where Phi_s spans the eigenvectors of M_o with
/// lambda < f_lambda * lambda_max. Returns M_o unchanged if none are small.
template <typename DerivedO, typename DerivedF>
auto evs_stabilize(const Eigen::MatrixBase<DerivedO>& M_o,
                   const Eigen::MatrixBase<DerivedF>& M_f,
                   typename DerivedO::Scalar epsilon,
                   typename DerivedO::Scalar f_lambda) {
  using Scalar = typename DerivedO::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (epsilon < 0) throw ConfigError("evs_stabilize: epsilon < 0");
  Mat M_e = M_o;
  if (epsilon == 0) return M_e;
  const EvsDecomposition<Scalar> d = evs_decompose(M_o, f_lambda);
  if (d.Phi_s.cols() == 0) return M_e;
  const Mat unscaled = d.Phi_s * d.Phi_s.transpose();
  const Scalar scale = M_f.cwiseAbs().maxCoeff() / unscaled.cwiseAbs().maxCoeff();
  M_e += (epsilon * scale) * unscaled;
  return M_e;
}

/// Row-sum lumping: diag_i = sum_j M_ij. May be negative.
template <typename Derived>
auto row_sum_lump(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  if (M.rows() != M.cols()) throw ConfigError("row_sum_lump: not square");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d(M.rows());
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Scalar s = 0;
    for (Eigen::Index j = 0; j < M.cols(); ++j) s += M(i, j);
    d[i] = s;
  }
  return Eigen::DiagonalMatrix<Scalar, Eigen::Dynamic>(d);
}

/// HRZ lumping: diagonal scaled so that its sum equals the element mass.
template <typename Derived>
auto hrz_lump(const Eigen::MatrixBase<Derived>& M, typename Derived::Scalar m_e) {
  using Scalar = typename Derived::Scalar;
  if (M.rows() != M.cols()) throw ConfigError("hrz_lump: not square");
  const Scalar trace = M.diagonal().sum();
  if (!(trace > 0) || !(m_e > 0))
    throw ConfigError("hrz_lump: trace and element mass must be positive");
  return Eigen::DiagonalMatrix<Scalar, Eigen::Dynamic>((m_e / trace) * M.diagonal());
}

/// Element mass after the stabilization pipeline. `diagonal` marks a
/// structurally diagonal result, which assembly stores without
/// off-diagonal entries.
struct StabilizedMass {
  Eigen::MatrixXd M;
  bool diagonal = false;
};

/// Per-element stabilization hook used by assembly. alpha is already in
/// M_o through the quadrature weights. EVS acts on Cut elements only;
/// lumping acts on Cut elements for GLL-Lagrange (uncut ones are diagonal by
/// nodal quadrature) and on all elements for B-splines. `nodal_diagonal`
/// marks an uncut GLL element whose M_o is already diagonal. The HRZ element
/// mass is the sum of all entries of the (stabilized) consistent matrix.
StabilizedMass apply_stabilization(const Eigen::MatrixXd& M_o,
                                   const Eigen::MatrixXd& M_f, ElementClass cls,
                                   BasisFamily family, bool nodal_diagonal,
                                   const StabilizationParams& params);

}  // namespace fcmwave
