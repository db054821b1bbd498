#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

#include "fcmwave/basis.hpp"
#include "fcmwave/geometry.hpp"
#include "fcmwave/linalg.hpp"
#include "fcmwave/quadrature.hpp"
#include "fcmwave/stabilization.hpp"

namespace fcmwave {

struct Material {
  double rho = 1.0;
  double c = 1.0;
};

/// Cartesian grid of n_e^3 elements. Immersed grids cover the extended
/// domain in global coordinates; boundary-fitted grids cover the physical
/// cube directly in its local (cube-centered) frame. Elements are numbered
/// lexicographically with the first direction fastest.
class Grid {
public:
  /// Classifies every element against the rotated cube. Cut elements
  /// without physical support at `discard_depth` (see has_physical_support)
  /// are relabelled Outside and dropped.
  static Grid immersed(const ImmersedGeometry& g, const BasisSpec& spec,
                       int discard_depth = 6);
  static Grid boundary_fitted(double l_p, const BasisSpec& spec);

  const BasisSpec& spec() const { return spec_; }
  int n_e() const { return spec_.n_e; }
  int num_elements() const { return n_e() * n_e() * n_e(); }
  bool is_boundary_fitted() const { return !geometry_.has_value(); }
  const std::optional<ImmersedGeometry>& geometry() const { return geometry_; }
  const Box& domain() const { return domain_; }
  Vec3 h() const { return domain_.extent() / n_e(); }

  std::array<int, 3> element_index(int e) const;
  int element_id(int i, int j, int k) const { return i + n_e() * (j + n_e() * k); }
  Box element_box(int e) const;
  ElementClass element_class(int e) const { return classes_[static_cast<std::size_t>(e)]; }
  const std::vector<int>& kept_elements() const { return kept_; }
  int count(ElementClass c) const;

  /// Grid frame <-> cube-local frame.
  Vec3 to_local(const Vec3& x) const;
  Vec3 from_local(const Vec3& xl) const;

  /// A kept element whose closed box contains the grid-frame point, or -1.
  int locate(const Vec3& x) const;

private:
  Grid(const BasisSpec& spec, const Box& domain, std::optional<ImmersedGeometry> g);

  BasisSpec spec_;
  Box domain_;
  std::optional<ImmersedGeometry> geometry_;
  std::vector<ElementClass> classes_;
  std::vector<int> kept_;
};

/// Tensor-product basis restricted to one element: the p+1 nonzero 1D
/// functions per direction, differentiated with respect to the reference
/// coordinate in [-1, 1].
class ElementBasis {
public:
  ElementBasis(const BasisSpec& spec, const std::array<int, 3>& element_index);

  int nb() const { return spec_.p + 1; }
  BasisValues1D<double> eval(int direction, double xi) const;
  /// Values (rows: points, cols: functions) and derivatives at many points.
  void tabulate(int direction, const Eigen::VectorXd& xi, Eigen::MatrixXd& V,
                Eigen::MatrixXd& D) const;
  /// 1D index of local function a in direction d (global lexicographic
  /// numbering before compaction).
  int global_index_1d(int direction, int a) const;
  /// Identifier shared by elements whose 1D bases coincide in `direction`.
  int shape_class(int direction) const;

private:
  BasisSpec spec_;
  std::array<int, 3> index_;
  Eigen::VectorXd gll_nodes_;
  Eigen::VectorXd knots_;
};

/// Compacted lexicographic numbering of the DOFs supported by kept elements.
class DofMap {
public:
  explicit DofMap(const Grid& grid);

  int n_dof() const { return n_dof_; }
  int nodes_per_direction() const { return n1_; }
  /// Compacted DOF of full lexicographic node index, or -1 if discarded.
  int dof_of_node(int i, int j, int k) const;
  /// DOFs of element e, local numbering with the first direction fastest.
  std::vector<int> element_dofs(int e) const;

private:
  BasisSpec spec_;
  int n_e_;
  int n1_;
  int n_dof_ = 0;
  std::vector<int> compact_;
};

struct DofPartition {
  std::vector<int> d_set;  // supported only by uncut elements
  std::vector<int> c_set;  // supported by at least one Cut element
};

struct DiscreteSystem {
  SparseSym M;
  SparseSym K;  // empty when assembled without stiffness
  Eigen::VectorXd F_s;
  int n_dof = 0;
  DofPartition partition;
  Material material;
};

struct ElementMatrices {
  Eigen::MatrixXd M_o, K_o;  // with the alpha_fcm weights of the rule
  Eigen::MatrixXd M_f, K_f;  // alpha_fcm = 1 everywhere
  bool nodal_diagonal = false;
};

/// Element mass and stiffness from quadrature rules. A TensorGLL mass rule
/// with GLL-Lagrange collocates quadrature and interpolation points and
/// yields a diagonal M_o. `h` is the physical element size per direction.
ElementMatrices element_matrices(const ElementBasis& basis, BasisFamily family,
                                 const Vec3& h, const ElementRule& mass_rule,
                                 const ElementRule& stiffness_rule,
                                 const Material& material);

struct AssemblyOptions {
  StabilizationParams stabilization;
  int octree_depth = 4;
  bool assemble_stiffness = true;
  Material material;
};

/// Element matrices of element e of the grid with the rule selection used
/// by assemble(): uncut GLL elements get GLL mass / GL stiffness, B-spline
/// and Cut elements GL or octree-GL for both.
ElementMatrices element_matrices(const Grid& grid, int e,
                                 const AssemblyOptions& opts);

/// Global M and K over kept elements with the stabilization pipeline.
DiscreteSystem assemble(const Grid& grid, const AssemblyOptions& opts);

/// Number of DOFs for a discretization of the given geometry without
/// assembling anything.
int dof_count(const BasisSpec& spec, const ImmersedGeometry& g, int discard_depth = 6);
int dof_count_boundary_fitted(const BasisSpec& spec);

/// Natural boundary term. Only homogeneous data (v_n = 0) is supported, for
/// which nothing is added; other values throw ConfigError.
void apply_neumann(const Grid& grid, double v_n, Eigen::VectorXd& F);

struct SourceSpec {
  Vec3 x_l_local = Vec3(-0.15, 0.0, 0.0);
  double sigma_s = 0.01;
  double f_e = 10.0;

  /// exp(-d^2 / 2), d = |x' - x_l| / sigma_s.
  double spatial(const Vec3& x_local) const;
  double t_shift() const;
};

struct LoadOptions {
  int octree_depth = 4;
  /// Extra Gauss points per direction beyond p+1 for the load integral.
  int extra_points = 6;
  double alpha = 1e-8;
  /// Elements farther than cutoff * sigma_s from the source are skipped.
  double cutoff = 10.0;
};

Eigen::VectorXd spatial_load(const DiscreteSystem& sys, const Grid& grid,
                             const SourceSpec& src, const LoadOptions& opts);

/// Ricker wavelet (1 - 2q^2) exp(-q^2), q = pi f_e (t - t_s),
/// t_s = 2 sqrt(6) / (pi f_e).
double ricker(double t, double f_e);

/// F(t) = ricker(t) F_s.
Eigen::VectorXd force_at(const Eigen::VectorXd& F_s, double t, double f_e);

/// Sparse interpolation operator: row i evaluates the discrete field at the
/// i-th point (given in the cube-local frame).
Eigen::SparseMatrix<double, Eigen::RowMajor> observation_matrix(
    const Grid& grid, const DofMap& dofs, const std::vector<Vec3>& points_local);

}  // namespace fcmwave
