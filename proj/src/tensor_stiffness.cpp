#include "fcmwave/tensor_stiffness.hpp"

#include "fcmwave/errors.hpp"

namespace fcmwave {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TensorGridStiffness::TensorGridStiffness(const Grid& grid, const Material& material)
    : n_e_(grid.n_e()), p_(grid.spec().p), n1_(grid.spec().functions_per_direction()) {
  if (!grid.is_boundary_fitted() || grid.spec().family != BasisFamily::GllLagrange)
    throw ConfigError("TensorGridStiffness: needs a boundary-fitted GLL-Lagrange grid");
  n_dof_ = static_cast<Eigen::Index>(n1_) * n1_ * n1_;
  const int nb = p_ + 1;
  const Rule1D<double> r = gl_rule<double>(nb);
  const VectorXd nodes = gll_rule<double>(p_).nodes;
  A_.setZero(nb, nb);
  B_.setZero(nb, nb);
  for (int g = 0; g < r.size(); ++g) {
    const BasisValues1D<double> v = lagrange_eval(nodes, r.nodes[g]);
    A_ += r.weights[g] * v.values * v.values.transpose();
    B_ += r.weights[g] * v.derivatives * v.derivatives.transpose();
  }
  const Vec3 h = grid.h();
  const double jac = h.prod() / 8.0;
  const double rc2 = material.rho * material.c * material.c;
  for (int d = 0; d < 3; ++d) scale_[d] = rc2 * jac * 4.0 / (h[d] * h[d]);
}

namespace {

using Map = Eigen::Map<MatrixXd>;
using CMap = Eigen::Map<const MatrixXd>;

// out = op applied along one tensor direction of an nb^3 block.
void along0(const MatrixXd& A, const double* in, double* out, int nb) {
  Map(out, nb, nb * nb).noalias() = A * CMap(in, nb, nb * nb);
}
void along1(const MatrixXd& A, const double* in, double* out, int nb) {
  for (int k = 0; k < nb; ++k)
    Map(out + k * nb * nb, nb, nb).noalias() = CMap(in + k * nb * nb, nb, nb) * A.transpose();
}
void along2(const MatrixXd& A, const double* in, double* out, int nb) {
  Map(out, nb * nb, nb).noalias() = CMap(in, nb * nb, nb) * A.transpose();
}

}  // namespace

void TensorGridStiffness::apply(const VectorXd& x, VectorXd& y) const {
  if (x.size() != n_dof_) throw ConfigError("TensorGridStiffness: dimension mismatch");
  y.setZero(n_dof_);
  const int nb = p_ + 1, n3 = nb * nb * nb;
  VectorXd u(n3), uA(n3), uB(n3), t1(n3), t2(n3), v(n3), w(n3);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n3));
  for (int ek = 0; ek < n_e_; ++ek)
    for (int ej = 0; ej < n_e_; ++ej)
      for (int ei = 0; ei < n_e_; ++ei) {
        int l = 0;
        for (int c = 0; c < nb; ++c)
          for (int b = 0; b < nb; ++b) {
            const Eigen::Index row =
                static_cast<Eigen::Index>(ei * p_) +
                n1_ * (static_cast<Eigen::Index>(ej * p_ + b) +
                       static_cast<Eigen::Index>(n1_) * (ek * p_ + c));
            for (int a = 0; a < nb; ++a, ++l) {
              idx[static_cast<std::size_t>(l)] = row + a;
              u[l] = x[row + a];
            }
          }
        along0(A_, u.data(), uA.data(), nb);
        along0(B_, u.data(), uB.data(), nb);
        along1(A_, uB.data(), t1.data(), nb);
        along1(B_, uA.data(), t2.data(), nb);
        t1 = scale_[0] * t1 + scale_[1] * t2;
        along2(A_, t1.data(), v.data(), nb);
        along1(A_, uA.data(), t2.data(), nb);
        along2(B_, t2.data(), w.data(), nb);
        v += scale_[2] * w;
        for (int m = 0; m < n3; ++m) y[idx[static_cast<std::size_t>(m)]] += v[m];
      }
}

}  // namespace fcmwave
