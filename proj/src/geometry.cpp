#include "fcmwave/geometry.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>

#include "fcmwave/errors.hpp"

namespace fcmwave {

Mat3 cardan_rotation_matrix(const CardanAngles& a) {
  const double deg = std::numbers::pi / 180.0;
  using Eigen::AngleAxisd;
  const Mat3 rz = AngleAxisd(a.psi * deg, Vec3::UnitZ()).toRotationMatrix();
  const Mat3 ry = AngleAxisd(a.theta * deg, Vec3::UnitY()).toRotationMatrix();
  const Mat3 rx = AngleAxisd(a.phi * deg, Vec3::UnitX()).toRotationMatrix();
  return rz * ry * rx;
}

Box::Box(const Vec3& lo_, const Vec3& hi_) : lo(lo_), hi(hi_) {
  if (!((lo.array() < hi.array()).all()))
    throw ConfigError("Box: lo must be strictly below hi componentwise");
}

const char* to_string(ElementClass c) {
  switch (c) {
    case ElementClass::Inside: return "inside";
    case ElementClass::Outside: return "outside";
    case ElementClass::Cut: return "cut";
  }
  return "?";
}

ImmersedGeometry::ImmersedGeometry(double l_p, double l_e,
                                   const CardanAngles& angles)
    : ImmersedGeometry(l_p, l_e, cardan_rotation_matrix(angles),
                       Vec3::Constant(0.5 * l_e)) {}

ImmersedGeometry::ImmersedGeometry(double l_p, double l_e, const Mat3& rotation,
                                   const Vec3& center)
    : l_p_(l_p), l_e_(l_e), T_(rotation), center_(center) {
  if (!(l_p > 0.0) || !(l_p < l_e))
    throw ConfigError("geometry: require 0 < l_p < l_e");
  if ((T_.transpose() * T_ - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-12 ||
      std::abs(T_.determinant() - 1.0) > 1e-12)
    throw ConfigError("geometry: rotation matrix is not a proper rotation");

  for (int i = 0; i < 3; ++i) sat_axes_.push_back(Vec3::Unit(i));
  for (int i = 0; i < 3; ++i) sat_axes_.push_back(T_.col(i));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      Vec3 c = Vec3::Unit(i).cross(T_.col(j));
      const double n = c.norm();
      if (n > 1e-12) sat_axes_.push_back(c / n);
    }
  }
  const double half = 0.5 * l_p_;
  for (const Vec3& L : sat_axes_)
    cube_radius_.push_back(half * (T_.transpose() * L).cwiseAbs().sum());
}

ImmersedGeometry ImmersedGeometry::benchmark() {
  return ImmersedGeometry(0.3, 0.5, CardanAngles{10.0, 10.0, 10.0});
}

Box ImmersedGeometry::extended_domain() const {
  const Vec3 h = Vec3::Constant(0.5 * l_e_);
  return Box(center_ - h, center_ + h);
}

ElementClass ImmersedGeometry::classify_point(const Vec3& x) const {
  return to_local(x).cwiseAbs().maxCoeff() <= 0.5 * l_p_
             ? ElementClass::Inside
             : ElementClass::Outside;
}

ElementClass ImmersedGeometry::classify_box(const Box& b) const {
  const Vec3 d = center_ - b.center();
  const Vec3 half = 0.5 * b.extent();
  for (std::size_t a = 0; a < sat_axes_.size(); ++a) {
    const Vec3& L = sat_axes_[a];
    const double rb = half.dot(L.cwiseAbs());
    if (std::abs(d.dot(L)) > rb + cube_radius_[a]) return ElementClass::Outside;
  }
  // The cube is convex: the box is contained iff all its corners are.
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner((c & 1) ? b.hi.x() : b.lo.x(), (c & 2) ? b.hi.y() : b.lo.y(),
                      (c & 4) ? b.hi.z() : b.lo.z());
    if (classify_point(corner) == ElementClass::Outside) return ElementClass::Cut;
  }
  return ElementClass::Inside;
}

namespace {

void partition(const Box& b, const ImmersedGeometry& g, int depth, int max_depth,
               ElementClass cls, std::vector<OctreeLeaf>& out) {
  if (cls != ElementClass::Cut || depth == max_depth) {
    out.push_back({b, cls, depth});
    return;
  }
  const Vec3 mid = b.center();
  for (int c = 0; c < 8; ++c) {
    Vec3 lo, hi;
    for (int k = 0; k < 3; ++k) {
      const bool upper = (c >> k) & 1;
      lo[k] = upper ? mid[k] : b.lo[k];
      hi[k] = upper ? b.hi[k] : mid[k];
    }
    Box child(lo, hi);
    partition(child, g, depth + 1, max_depth, g.classify_box(child), out);
  }
}

}  // namespace

std::vector<OctreeLeaf> octree_partition(const Box& b, const ImmersedGeometry& g,
                                         int max_depth) {
  if (max_depth < 0) throw ConfigError("octree_partition: max_depth < 0");
  std::vector<OctreeLeaf> leaves;
  partition(b, g, 0, max_depth, g.classify_box(b), leaves);
  return leaves;
}

}  // namespace fcmwave
