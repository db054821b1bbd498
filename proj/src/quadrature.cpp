#include "fcmwave/quadrature.hpp"

#include "fcmwave/errors.hpp"

namespace fcmwave {

std::vector<QuadPoint> ElementRule::points() const {
  std::vector<QuadPoint> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (const QuadBlock& b : blocks) {
    const Eigen::Index n0 = b.xi[0].size(), n1 = b.xi[1].size();
    for (Eigen::Index k = 0; k < b.xi[2].size(); ++k)
      for (Eigen::Index j = 0; j < n1; ++j)
        for (Eigen::Index i = 0; i < n0; ++i) {
          const Eigen::Index idx = i + n0 * (j + n1 * k);
          out.push_back({Vec3(b.xi[0][i], b.xi[1][j], b.xi[2][k]),
                         b.w[0][i] * b.w[1][j] * b.w[2][k], b.alpha[idx]});
        }
  }
  return out;
}

Eigen::Index ElementRule::size() const {
  Eigen::Index n = 0;
  for (const QuadBlock& b : blocks) n += b.size();
  return n;
}

double ElementRule::weight_sum() const {
  double s = 0.0;
  for (const QuadBlock& b : blocks) s += b.w[0].sum() * b.w[1].sum() * b.w[2].sum();
  return s;
}

namespace {

/// Maps a 1D rule on [-1,1] onto the reference sub-interval [a, b].
void map_rule(const Rule1D<double>& r, double a, double b, Eigen::VectorXd& xi,
              Eigen::VectorXd& w) {
  const double half = 0.5 * (b - a);
  xi = (a + half) + half * r.nodes.array();
  w = half * r.weights;
}

QuadBlock make_block(const Rule1D<double>& r, const Vec3& ref_lo,
                     const Vec3& ref_hi, double alpha) {
  QuadBlock b;
  for (int d = 0; d < 3; ++d) map_rule(r, ref_lo[d], ref_hi[d], b.xi[d], b.w[d]);
  b.alpha = Eigen::VectorXd::Constant(r.size() * r.size() * r.size(), alpha);
  return b;
}

Vec3 to_reference(const Box& elem, const Vec3& x) {
  return (-1.0 + 2.0 * (x - elem.lo).array() / elem.extent().array()).matrix();
}

Vec3 to_physical(const Box& elem, const Vec3& xi) {
  return (elem.lo.array() + 0.5 * (xi.array() + 1.0) * elem.extent().array())
      .matrix();
}

}  // namespace

ElementRule tensor_rule(const Rule1D<double>& rule1d, RuleKind kind) {
  ElementRule rule;
  rule.kind = kind;
  rule.blocks.push_back(make_block(rule1d, Vec3::Constant(-1), Vec3::Constant(1), 1.0));
  return rule;
}

ElementRule cut_cell_rule(const Box& element_box, const ImmersedGeometry& g,
                          int q, int depth, double alpha) {
  if (depth < 0) throw ConfigError("cut_cell_rule: depth < 0");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ConfigError("cut_cell_rule: alpha must lie in [0, 1]");
  const Rule1D<double> r = gl_rule(q);
  ElementRule rule;
  rule.kind = RuleKind::OctreeGL;
  for (const OctreeLeaf& leaf : octree_partition(element_box, g, depth)) {
    const Vec3 lo = to_reference(element_box, leaf.box.lo);
    const Vec3 hi = to_reference(element_box, leaf.box.hi);
    const double a = leaf.cls == ElementClass::Inside ? 1.0 : alpha;
    QuadBlock b = make_block(r, lo, hi, a);
    if (leaf.cls == ElementClass::Cut) {
      Eigen::Index idx = 0;
      for (int k = 0; k < q; ++k)
        for (int j = 0; j < q; ++j)
          for (int i = 0; i < q; ++i, ++idx) {
            const Vec3 x = to_physical(
                element_box, Vec3(b.xi[0][i], b.xi[1][j], b.xi[2][k]));
            b.alpha[idx] =
                g.classify_point(x) == ElementClass::Inside ? 1.0 : alpha;
          }
    }
    rule.blocks.push_back(std::move(b));
  }
  return rule;
}

double indicator_volume(const ElementRule& rule) {
  double v = 0.0;
  for (const QuadBlock& b : rule.blocks) {
    const Eigen::Index n0 = b.xi[0].size(), n1 = b.xi[1].size();
    for (Eigen::Index k = 0; k < b.xi[2].size(); ++k)
      for (Eigen::Index j = 0; j < n1; ++j)
        for (Eigen::Index i = 0; i < n0; ++i)
          v += b.w[0][i] * b.w[1][j] * b.w[2][k] * b.alpha[i + n0 * (j + n1 * k)];
  }
  return v;
}

namespace {

bool support_search(const Box& b, const ImmersedGeometry& g,
                    const Rule1D<double>& r, int level, int depth,
                    ElementClass cls) {
  if (cls == ElementClass::Inside) return true;
  if (cls == ElementClass::Outside) return false;
  if (level == depth) {
    const Vec3 ext = b.extent();
    for (Eigen::Index k = 0; k < r.size(); ++k)
      for (Eigen::Index j = 0; j < r.size(); ++j)
        for (Eigen::Index i = 0; i < r.size(); ++i) {
          const Vec3 x = b.lo + 0.5 * Vec3((r.nodes[i] + 1) * ext.x(),
                                           (r.nodes[j] + 1) * ext.y(),
                                           (r.nodes[k] + 1) * ext.z());
          if (g.classify_point(x) == ElementClass::Inside) return true;
        }
    return false;
  }
  const Vec3 mid = b.center();
  for (int c = 0; c < 8; ++c) {
    Vec3 lo, hi;
    for (int k = 0; k < 3; ++k) {
      const bool upper = (c >> k) & 1;
      lo[k] = upper ? mid[k] : b.lo[k];
      hi[k] = upper ? b.hi[k] : mid[k];
    }
    const Box child(lo, hi);
    if (support_search(child, g, r, level + 1, depth, g.classify_box(child)))
      return true;
  }
  return false;
}

}  // namespace

bool has_physical_support(const Box& element_box, const ImmersedGeometry& g,
                          int q, int depth) {
  return support_search(element_box, g, gl_rule(q), 0, depth,
                        g.classify_box(element_box));
}

}  // namespace fcmwave
