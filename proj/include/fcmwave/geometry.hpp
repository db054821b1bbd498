#pragma once

#include <Eigen/Core>
#include <vector>

namespace fcmwave {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Cardan angles in degrees. Converted to radians only when the rotation
/// matrix is built.
struct CardanAngles {
  double phi = 0.0;
  double theta = 0.0;
  double psi = 0.0;
};

/// Intrinsic X-Y-Z convention: T = Rz(psi) * Ry(theta) * Rx(phi).
Mat3 cardan_rotation_matrix(const CardanAngles& a);

struct Box {
  Vec3 lo;
  Vec3 hi;

  Box() = default;
  Box(const Vec3& lo_, const Vec3& hi_);

  double volume() const { return (hi - lo).prod(); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
};

enum class ElementClass { Inside, Outside, Cut };

const char* to_string(ElementClass c);

/// A cube of edge l_p, rotated by T about `center`, immersed in an
/// axis-aligned cube of edge l_e sharing the same center.
///
/// Global and local coordinates are related by x = center + T x'. The local
/// frame is cube-centered, so the physical domain is [-l_p/2, l_p/2]^3.
class ImmersedGeometry {
public:
  ImmersedGeometry(double l_p, double l_e, const CardanAngles& angles);
  ImmersedGeometry(double l_p, double l_e, const Mat3& rotation,
                   const Vec3& center);

  /// Benchmark cube: l_p = 0.3, l_e = 0.5, 10/10/10 degrees.
  static ImmersedGeometry benchmark();

  double l_p() const { return l_p_; }
  double l_e() const { return l_e_; }
  const Mat3& rotation() const { return T_; }
  const Vec3& center() const { return center_; }

  /// The extended (embedding) domain [center - l_e/2, center + l_e/2]^3.
  Box extended_domain() const;

  Vec3 to_local(const Vec3& x) const { return T_.transpose() * (x - center_); }
  Vec3 to_global(const Vec3& xl) const { return center_ + T_ * xl; }

  /// Closed cube: boundary points are Inside.
  ElementClass classify_point(const Vec3& x) const;

  /// Exact axis-aligned box vs rotated cube classification using the
  /// separating axis theorem (15 candidate axes).
  ElementClass classify_box(const Box& b) const;

private:
  double l_p_;
  double l_e_;
  Mat3 T_;
  Vec3 center_;
  // Unit SAT axes: 3 box normals, 3 cube normals, 9 edge cross products.
  std::vector<Vec3> sat_axes_;
  std::vector<double> cube_radius_;  // cube half-projection per axis
};

struct OctreeLeaf {
  Box box;
  ElementClass cls;
  int depth;
};

/// Recursive 2x2x2 subdivision of Cut boxes. Leaves tile `b` exactly; only
/// Cut boxes are subdivided; recursion stops at max_depth.
std::vector<OctreeLeaf> octree_partition(const Box& b,
                                         const ImmersedGeometry& g,
                                         int max_depth);

}  // namespace fcmwave
