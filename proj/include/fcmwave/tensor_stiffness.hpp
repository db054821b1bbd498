#pragma once

#include <Eigen/Core>

#include "fcmwave/assembly.hpp"

namespace fcmwave {

/// Matrix-free stiffness for boundary-fitted GLL-Lagrange grids. Every
/// element shares K_e = rho c^2 sum_d (B_d (x) A (x) A) with exact 1D mass A
/// and stiffness B, so K x is applied by 1D sweeps without storing K.
class TensorGridStiffness {
public:
  TensorGridStiffness(const Grid& grid, const Material& material);

  Eigen::Index rows() const { return n_dof_; }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;

  const Eigen::MatrixXd& mass_1d() const { return A_; }
  const Eigen::MatrixXd& stiffness_1d() const { return B_; }

private:
  int n_e_, p_, n1_;
  Eigen::Index n_dof_;
  Eigen::MatrixXd A_, B_;
  Eigen::Vector3d scale_;
};

}  // namespace fcmwave
