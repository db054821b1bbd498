#pragma once

#include <array>
#include <vector>

#include "fcmwave/basis.hpp"
#include "fcmwave/geometry.hpp"

namespace fcmwave {

struct QuadPoint {
  Vec3 xi;           // reference coordinates in [-1, 1]^3
  double w;          // includes the leaf-to-element volume scaling
  double alpha_fcm;  // indicator value: 1 inside, alpha outside
};

enum class RuleKind { TensorGL, TensorGLL, OctreeGL };

/// A tensor grid of points over one axis-aligned sub-box of the reference
/// element. Points are ordered with the first direction fastest. Keeping the
/// tensor structure lets element integrals be sum-factorized per block.
struct QuadBlock {
  std::array<Eigen::VectorXd, 3> xi;
  std::array<Eigen::VectorXd, 3> w;
  Eigen::VectorXd alpha;

  Eigen::Index size() const { return alpha.size(); }
};

struct ElementRule {
  RuleKind kind = RuleKind::TensorGL;
  std::vector<QuadBlock> blocks;

  std::vector<QuadPoint> points() const;
  Eigen::Index size() const;
  double weight_sum() const;
};

/// q^3 product rule over the whole element with alpha_fcm = 1.
ElementRule tensor_rule(const Rule1D<double>& rule1d,
                        RuleKind kind = RuleKind::TensorGL);

/// Octree-composed Gauss-Legendre rule for an element of the extended grid.
/// Inside leaves carry alpha_fcm = 1, Outside leaves alpha; leaves still Cut
/// at max depth are classified point by point. Inside/Outside elements
/// degenerate to a single tensor block.
ElementRule cut_cell_rule(const Box& element_box, const ImmersedGeometry& g,
                          int q, int depth, double alpha);

/// Sum of w * alpha_fcm, in [8 alpha, 8].
double indicator_volume(const ElementRule& rule);

/// True when the element has physical support as seen by quadrature: some
/// octree leaf (up to `depth`) is Inside, or some GL point (q per direction)
/// of a Cut leaf at max depth lies in the closed cube. Used to decide which
/// Cut elements are kept in the discretization.
bool has_physical_support(const Box& element_box, const ImmersedGeometry& g,
                          int q, int depth);

}  // namespace fcmwave
