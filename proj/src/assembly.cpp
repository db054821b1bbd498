#include "fcmwave/assembly.hpp"

#include <cmath>
#include <exception>
#include <map>
#include <memory>

#include "fcmwave/errors.hpp"

namespace fcmwave {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------- Grid

Grid::Grid(const BasisSpec& spec, const Box& domain, std::optional<ImmersedGeometry> g)
    : spec_(spec), domain_(domain), geometry_(std::move(g)) {
  spec_.validate();
}

Grid Grid::immersed(const ImmersedGeometry& g, const BasisSpec& spec, int discard_depth) {
  if (discard_depth < 0) throw ConfigError("discard_depth must be >= 0");
  Grid grid(spec, g.extended_domain(), g);
  const int n = grid.num_elements();
  grid.classes_.resize(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) {
    const Box b = grid.element_box(e);
    ElementClass c = g.classify_box(b);
    if (c == ElementClass::Cut && !has_physical_support(b, g, spec.p + 1, discard_depth))
      c = ElementClass::Outside;
    grid.classes_[static_cast<std::size_t>(e)] = c;
    if (c != ElementClass::Outside) grid.kept_.push_back(e);
  }
  return grid;
}

Grid Grid::boundary_fitted(double l_p, const BasisSpec& spec) {
  if (!(l_p > 0.0)) throw ConfigError("l_p must be positive");
  Grid grid(spec, Box(Vec3::Constant(-0.5 * l_p), Vec3::Constant(0.5 * l_p)), std::nullopt);
  const int n = grid.num_elements();
  grid.classes_.assign(static_cast<std::size_t>(n), ElementClass::Inside);
  grid.kept_.resize(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) grid.kept_[static_cast<std::size_t>(e)] = e;
  return grid;
}

std::array<int, 3> Grid::element_index(int e) const {
  const int n = n_e();
  return {e % n, (e / n) % n, e / (n * n)};
}

Box Grid::element_box(int e) const {
  const auto idx = element_index(e);
  const Vec3 h = this->h();
  Vec3 lo, hi;
  for (int d = 0; d < 3; ++d) {
    lo[d] = domain_.lo[d] + idx[d] * h[d];
    hi[d] = idx[d] + 1 == n_e() ? domain_.hi[d] : domain_.lo[d] + (idx[d] + 1) * h[d];
  }
  return Box(lo, hi);
}

int Grid::count(ElementClass c) const {
  int k = 0;
  for (ElementClass x : classes_) k += x == c;
  return k;
}

Vec3 Grid::to_local(const Vec3& x) const {
  return geometry_ ? geometry_->to_local(x) : x;
}

Vec3 Grid::from_local(const Vec3& xl) const {
  return geometry_ ? geometry_->to_global(xl) : xl;
}

int Grid::locate(const Vec3& x) const {
  const Vec3 h = this->h();
  const double tol = 1e-10;
  std::array<std::vector<int>, 3> cand;
  for (int d = 0; d < 3; ++d) {
    const double t = (x[d] - domain_.lo[d]) / h[d];
    const int i = static_cast<int>(std::floor(t));
    for (int c : {i, i - 1, i + 1})
      if (c >= 0 && c < n_e() && t >= c - tol && t <= c + 1 + tol) cand[d].push_back(c);
  }
  for (int k : cand[2])
    for (int j : cand[1])
      for (int i : cand[0]) {
        const int e = element_id(i, j, k);
        if (element_class(e) != ElementClass::Outside) return e;
      }
  return -1;
}

// --------------------------------------------------------- ElementBasis

ElementBasis::ElementBasis(const BasisSpec& spec, const std::array<int, 3>& element_index)
    : spec_(spec), index_(element_index) {
  if (spec_.family == BasisFamily::GllLagrange)
    gll_nodes_ = gll_rule<double>(spec_.p).nodes;
  else
    knots_ = open_uniform_knots<double>(spec_.n_e, spec_.p, 0.0, double(spec_.n_e));
}

BasisValues1D<double> ElementBasis::eval(int direction, double xi) const {
  if (spec_.family == BasisFamily::GllLagrange) return lagrange_eval(gll_nodes_, xi);
  const int i = index_[static_cast<std::size_t>(direction)];
  BasisValues1D<double> v =
      bspline_eval_span(knots_, spec_.p, i + spec_.p, i + 0.5 * (xi + 1.0));
  v.derivatives *= 0.5;
  return v;
}

void ElementBasis::tabulate(int direction, const VectorXd& xi, MatrixXd& V,
                            MatrixXd& D) const {
  V.resize(xi.size(), nb());
  D.resize(xi.size(), nb());
  for (Eigen::Index g = 0; g < xi.size(); ++g) {
    const BasisValues1D<double> b = eval(direction, xi[g]);
    V.row(g) = b.values.transpose();
    D.row(g) = b.derivatives.transpose();
  }
}

int ElementBasis::global_index_1d(int direction, int a) const {
  const int i = index_[static_cast<std::size_t>(direction)];
  return spec_.family == BasisFamily::GllLagrange ? i * spec_.p + a : i + a;
}

int ElementBasis::shape_class(int direction) const {
  if (spec_.family == BasisFamily::GllLagrange) return 0;
  const int i = index_[static_cast<std::size_t>(direction)];
  const int p = spec_.p, n = spec_.n_e;
  if (i < p) return i;
  if (i <= n - 1 - p) return p;
  return p + 1 + (i - (n - p));
}

// --------------------------------------------------------------- DofMap

DofMap::DofMap(const Grid& grid)
    : spec_(grid.spec()), n_e_(grid.n_e()), n1_(grid.spec().functions_per_direction()) {
  const std::size_t total = static_cast<std::size_t>(n1_) * n1_ * n1_;
  std::vector<char> used(total, 0);
  const int nb = spec_.p + 1;
  const int stride = spec_.family == BasisFamily::GllLagrange ? spec_.p : 1;
  for (int e : grid.kept_elements()) {
    const auto idx = grid.element_index(e);
    for (int c = 0; c < nb; ++c)
      for (int b = 0; b < nb; ++b)
        for (int a = 0; a < nb; ++a) {
          const std::size_t node =
              static_cast<std::size_t>(idx[0] * stride + a) +
              static_cast<std::size_t>(n1_) *
                  (static_cast<std::size_t>(idx[1] * stride + b) +
                   static_cast<std::size_t>(n1_) * static_cast<std::size_t>(idx[2] * stride + c));
          used[node] = 1;
        }
  }
  compact_.assign(total, -1);
  for (std::size_t k = 0; k < total; ++k)
    if (used[k]) compact_[k] = n_dof_++;
}

int DofMap::dof_of_node(int i, int j, int k) const {
  if (i < 0 || j < 0 || k < 0 || i >= n1_ || j >= n1_ || k >= n1_) return -1;
  return compact_[static_cast<std::size_t>(i) +
                  static_cast<std::size_t>(n1_) *
                      (static_cast<std::size_t>(j) +
                       static_cast<std::size_t>(n1_) * static_cast<std::size_t>(k))];
}

std::vector<int> DofMap::element_dofs(int e) const {
  const int n = n_e_;
  const std::array<int, 3> idx{e % n, (e / n) % n, e / (n * n)};
  const int nb = spec_.p + 1;
  const int stride = spec_.family == BasisFamily::GllLagrange ? spec_.p : 1;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(nb * nb * nb));
  for (int c = 0; c < nb; ++c)
    for (int b = 0; b < nb; ++b)
      for (int a = 0; a < nb; ++a)
        out.push_back(dof_of_node(idx[0] * stride + a, idx[1] * stride + b,
                                  idx[2] * stride + c));
  return out;
}

// ------------------------------------------------------ element integrals

namespace {

/// Legendre polynomials P_0..P_{n-1} at the points x (rows).
MatrixXd legendre_table(const VectorXd& x, int n) {
  MatrixXd P(x.size(), n);
  for (Eigen::Index g = 0; g < x.size(); ++g) {
    double p0 = 1.0, p1 = x[g];
    P(g, 0) = 1.0;
    if (n > 1) P(g, 1) = p1;
    for (int k = 2; k < n; ++k) {
      const double p2 = ((2 * k - 1) * x[g] * p1 - (k - 1) * p0) / k;
      P(g, k) = p2;
      p0 = p1;
      p1 = p2;
    }
  }
  return P;
}

/// out(a,b,c) = sum_ijk T0(i,a) T1(j,b) T2(k,c) G(i,j,k), first index fastest.
VectorXd tensor_contract(const VectorXd& G, const MatrixXd& T0, const MatrixXd& T1,
                         const MatrixXd& T2) {
  const Eigen::Index q0 = T0.rows(), q1 = T1.rows(), q2 = T2.rows();
  const Eigen::Index n0 = T0.cols(), n1 = T1.cols(), n2 = T2.cols();
  const MatrixXd A = T0.transpose() * Eigen::Map<const MatrixXd>(G.data(), q0, q1 * q2);
  MatrixXd B(n0, n1 * q2);
  for (Eigen::Index k = 0; k < q2; ++k)
    B.middleCols(k * n1, n1).noalias() = A.middleCols(k * q1, q1) * T1;
  VectorXd out(n0 * n1 * n2);
  Eigen::Map<MatrixXd>(out.data(), n0 * n1, n2).noalias() =
      Eigen::Map<const MatrixXd>(B.data(), n0 * n1, q2) * T2;
  return out;
}

struct Moments {
  VectorXd weighted;  // with alpha_fcm
  VectorXd full;      // alpha_fcm = 1
};

Moments legendre_moments(const ElementRule& rule, int n) {
  Moments m{VectorXd::Zero(n * n * n), VectorXd::Zero(n * n * n)};
  for (const QuadBlock& b : rule.blocks) {
    const Eigen::Index q0 = b.xi[0].size(), q1 = b.xi[1].size(), q2 = b.xi[2].size();
    VectorXd W(q0 * q1 * q2);
    for (Eigen::Index k = 0; k < q2; ++k)
      for (Eigen::Index j = 0; j < q1; ++j)
        for (Eigen::Index i = 0; i < q0; ++i)
          W[i + q0 * (j + q1 * k)] = b.w[0][i] * b.w[1][j] * b.w[2][k];
    const MatrixXd P0 = legendre_table(b.xi[0], n), P1 = legendre_table(b.xi[1], n),
                   P2 = legendre_table(b.xi[2], n);
    m.full += tensor_contract(W, P0, P1, P2);
    if ((b.alpha.array() == 1.0).all())
      m.weighted += tensor_contract(W, P0, P1, P2);
    else
      m.weighted += tensor_contract(W.cwiseProduct(b.alpha), P0, P1, P2);
  }
  return m;
}

/// Legendre coefficients of the 1D products N_i N_j and N_i' N_j' (rows
/// i + nb j, columns degree).
struct ProductCoeffs {
  MatrixXd VV, DD;
};

ProductCoeffs product_coeffs(const ElementBasis& basis, int direction, int n) {
  const int nb = basis.nb();
  const Rule1D<double> r = gl_rule<double>(n);
  MatrixXd V, D;
  basis.tabulate(direction, r.nodes, V, D);
  const MatrixXd P = legendre_table(r.nodes, n);
  MatrixXd PW = P;
  for (int a = 0; a < n; ++a) PW.col(a) = PW.col(a).cwiseProduct(r.weights) * (2 * a + 1) / 2.0;
  MatrixXd VVg(r.nodes.size(), nb * nb), DDg(r.nodes.size(), nb * nb);
  for (int j = 0; j < nb; ++j)
    for (int i = 0; i < nb; ++i) {
      VVg.col(i + nb * j) = V.col(i).cwiseProduct(V.col(j));
      DDg.col(i + nb * j) = D.col(i).cwiseProduct(D.col(j));
    }
  return {VVg.transpose() * PW, DDg.transpose() * PW};
}

/// Element matrix from moments: E[(i0,i1,i2),(j0,j1,j2)] =
/// sum_abc C0[(i0 j0),a] C1[(i1 j1),b] C2[(i2 j2),c] m(a,b,c).
void add_from_moments(const VectorXd& m, const MatrixXd& C0, const MatrixXd& C1,
                      const MatrixXd& C2, int nb, double scale, MatrixXd& E) {
  const VectorXd t = tensor_contract(m, C0.transpose(), C1.transpose(), C2.transpose());
  const int nb2 = nb * nb;
  for (int j2 = 0; j2 < nb; ++j2)
    for (int i2 = 0; i2 < nb; ++i2)
      for (int j1 = 0; j1 < nb; ++j1)
        for (int i1 = 0; i1 < nb; ++i1) {
          const Eigen::Index base =
              nb2 * ((i1 + nb * j1) + static_cast<Eigen::Index>(nb2) * (i2 + nb * j2));
          for (int j0 = 0; j0 < nb; ++j0)
            for (int i0 = 0; i0 < nb; ++i0)
              E(i0 + nb * (i1 + nb * i2), j0 + nb * (j1 + nb * j2)) +=
                  scale * t[base + i0 + nb * j0];
        }
}

void mass_and_stiffness(const VectorXd& m, const std::array<ProductCoeffs, 3>& C,
                        const Vec3& h, const Material& mat, int nb, MatrixXd* M,
                        MatrixXd* K) {
  const int n3 = nb * nb * nb;
  const double jac = h.prod() / 8.0;
  if (M) {
    M->setZero(n3, n3);
    add_from_moments(m, C[0].VV, C[1].VV, C[2].VV, nb, mat.rho * jac, *M);
    *M = 0.5 * (*M + M->transpose());
  }
  if (K) {
    K->setZero(n3, n3);
    const double s = mat.rho * mat.c * mat.c * jac;
    add_from_moments(m, C[0].DD, C[1].VV, C[2].VV, nb, s * 4.0 / (h[0] * h[0]), *K);
    add_from_moments(m, C[0].VV, C[1].DD, C[2].VV, nb, s * 4.0 / (h[1] * h[1]), *K);
    add_from_moments(m, C[0].VV, C[1].VV, C[2].DD, nb, s * 4.0 / (h[2] * h[2]), *K);
    *K = 0.5 * (*K + K->transpose());
  }
}

}  // namespace

ElementMatrices element_matrices(const ElementBasis& basis, BasisFamily family,
                                 const Vec3& h, const ElementRule& mass_rule,
                                 const ElementRule& stiffness_rule,
                                 const Material& material) {
  const int nb = basis.nb();
  const int p = nb - 1;
  const int n = 2 * p + 1;
  const bool nodal = mass_rule.kind == RuleKind::TensorGLL;
  if (nodal) {
    if (family != BasisFamily::GllLagrange)
      throw ConfigError("element_matrices: GLL mass rule requires GLL-Lagrange basis");
    if (mass_rule.blocks.size() != 1 || mass_rule.blocks[0].xi[0].size() != nb)
      throw ConfigError("element_matrices: GLL mass rule must have p+1 points per direction");
  }
  if (stiffness_rule.kind == RuleKind::TensorGLL)
    throw ConfigError("element_matrices: stiffness requires a Gauss-Legendre rule");

  std::array<ProductCoeffs, 3> C;
  for (int d = 0; d < 3; ++d) C[static_cast<std::size_t>(d)] = product_coeffs(basis, d, n);

  ElementMatrices out;
  const Moments ms = legendre_moments(stiffness_rule, n);
  mass_and_stiffness(ms.weighted, C, h, material, nb, nullptr, &out.K_o);
  mass_and_stiffness(ms.full, C, h, material, nb, &out.M_f, &out.K_f);

  if (nodal) {
    // Collocated GLL quadrature: N_i(x_g) = delta_ig, so M_o is diagonal.
    const QuadBlock& b = mass_rule.blocks[0];
    const double jac = h.prod() / 8.0;
    out.M_o.setZero(nb * nb * nb, nb * nb * nb);
    for (int c = 0; c < nb; ++c)
      for (int bb = 0; bb < nb; ++bb)
        for (int a = 0; a < nb; ++a) {
          const int I = a + nb * (bb + nb * c);
          out.M_o(I, I) = material.rho * jac * b.w[0][a] * b.w[1][bb] * b.w[2][c] * b.alpha[I];
        }
    out.nodal_diagonal = true;
  } else if (&mass_rule == &stiffness_rule) {
    mass_and_stiffness(ms.weighted, C, h, material, nb, &out.M_o, nullptr);
  } else {
    const Moments mm = legendre_moments(mass_rule, n);
    mass_and_stiffness(mm.weighted, C, h, material, nb, &out.M_o, nullptr);
  }
  return out;
}

ElementMatrices element_matrices(const Grid& grid, int e, const AssemblyOptions& opts) {
  const BasisSpec& spec = grid.spec();
  const ElementBasis basis(spec, grid.element_index(e));
  const Box box = grid.element_box(e);
  const ElementClass cls = grid.element_class(e);
  const Vec3 h = box.extent();
  if (cls == ElementClass::Cut) {
    const ElementRule rule = cut_cell_rule(box, *grid.geometry(), spec.p + 1,
                                           opts.octree_depth, opts.stabilization.alpha);
    return element_matrices(basis, spec.family, h, rule, rule, opts.material);
  }
  if (cls == ElementClass::Outside)
    throw ConfigError("element_matrices: element " + std::to_string(e) + " is not kept");
  const ElementRule gl = tensor_rule(gl_rule<double>(spec.p + 1));
  if (spec.family == BasisFamily::GllLagrange) {
    const ElementRule gll = tensor_rule(gll_rule<double>(spec.p), RuleKind::TensorGLL);
    return element_matrices(basis, spec.family, h, gll, gl, opts.material);
  }
  return element_matrices(basis, spec.family, h, gl, gl, opts.material);
}

// ------------------------------------------------------------- assembly

DiscreteSystem assemble(const Grid& grid, const AssemblyOptions& opts) {
  opts.stabilization.validate();
  if (opts.octree_depth < 0) throw ConfigError("octree_depth must be >= 0");
  if (!(opts.material.rho > 0.0) || !(opts.material.c > 0.0))
    throw ConfigError("material rho and c must be positive");
  const std::vector<int>& kept = grid.kept_elements();
  if (kept.empty()) throw ConfigError("assemble: no kept elements");

  const DofMap dofs(grid);
  const BasisSpec& spec = grid.spec();
  DiscreteSystem sys;
  sys.n_dof = dofs.n_dof();
  sys.material = opts.material;

  struct Local {
    StabilizedMass M;
    MatrixXd K;
  };
  std::map<std::array<int, 3>, std::shared_ptr<const Local>> cache;
  std::vector<Eigen::Triplet<double>> tm, tk;
  std::vector<char> cut_dof(static_cast<std::size_t>(sys.n_dof), 0);

  const std::size_t chunk = 64;
  std::vector<std::shared_ptr<const Local>> locals;
  for (std::size_t start = 0; start < kept.size(); start += chunk) {
    const std::size_t stop = std::min(kept.size(), start + chunk);
    locals.assign(stop - start, nullptr);
    // Uncut elements with identical 1D bases share their matrices.
    for (std::size_t k = start; k < stop; ++k) {
      const int e = kept[k];
      if (grid.element_class(e) == ElementClass::Cut) continue;
      const ElementBasis basis(spec, grid.element_index(e));
      const std::array<int, 3> key{basis.shape_class(0), basis.shape_class(1),
                                   basis.shape_class(2)};
      auto it = cache.find(key);
      if (it == cache.end()) {
        const ElementMatrices em = element_matrices(grid, e, opts);
        auto loc = std::make_shared<Local>();
        loc->M = apply_stabilization(em.M_o, em.M_f, ElementClass::Inside, spec.family,
                                     em.nodal_diagonal, opts.stabilization);
        if (opts.assemble_stiffness) loc->K = em.K_o;
        it = cache.emplace(key, std::move(loc)).first;
      }
      locals[k - start] = it->second;
    }
    const int m = static_cast<int>(stop - start);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < m; ++k) {
      const int e = kept[start + static_cast<std::size_t>(k)];
      if (grid.element_class(e) != ElementClass::Cut) continue;
      try {
        const ElementMatrices em = element_matrices(grid, e, opts);
        auto loc = std::make_shared<Local>();
        loc->M = apply_stabilization(em.M_o, em.M_f, ElementClass::Cut, spec.family,
                                     em.nodal_diagonal, opts.stabilization);
        if (opts.assemble_stiffness) loc->K = em.K_o;
        locals[static_cast<std::size_t>(k)] = std::move(loc);
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    for (std::size_t k = start; k < stop; ++k) {
      const int e = kept[k];
      const Local& loc = *locals[k - start];
      const std::vector<int> ed = dofs.element_dofs(e);
      const int n = static_cast<int>(ed.size());
      if (grid.element_class(e) == ElementClass::Cut)
        for (int d : ed) cut_dof[static_cast<std::size_t>(d)] = 1;
      for (int i = 0; i < n; ++i) {
        if (loc.M.diagonal) {
          tm.emplace_back(ed[i], ed[i], loc.M.M(i, i));
        } else {
          for (int j = 0; j < n; ++j) tm.emplace_back(ed[i], ed[j], loc.M.M(i, j));
        }
        if (opts.assemble_stiffness)
          for (int j = 0; j < n; ++j) tk.emplace_back(ed[i], ed[j], loc.K(i, j));
      }
    }
  }
  sys.M.resize(sys.n_dof, sys.n_dof);
  sys.M.setFromTriplets(tm.begin(), tm.end());
  tm = {};
  if (opts.assemble_stiffness) {
    sys.K.resize(sys.n_dof, sys.n_dof);
    sys.K.setFromTriplets(tk.begin(), tk.end());
  }
  for (int d = 0; d < sys.n_dof; ++d)
    (cut_dof[static_cast<std::size_t>(d)] ? sys.partition.c_set : sys.partition.d_set)
        .push_back(d);
  return sys;
}

int dof_count(const BasisSpec& spec, const ImmersedGeometry& g, int discard_depth) {
  return DofMap(Grid::immersed(g, spec, discard_depth)).n_dof();
}

int dof_count_boundary_fitted(const BasisSpec& spec) {
  spec.validate();
  const int n1 = spec.functions_per_direction();
  return n1 * n1 * n1;
}

void apply_neumann(const Grid&, double v_n, VectorXd&) {
  if (v_n != 0.0) throw ConfigError("nonzero Neumann data is not supported");
}

// ---------------------------------------------------------------- loads

double SourceSpec::spatial(const Vec3& x_local) const {
  const double d = (x_local - x_l_local).norm() / sigma_s;
  return std::exp(-0.5 * d * d);
}

double SourceSpec::t_shift() const { return 2.0 * std::sqrt(6.0) / (M_PI * f_e); }

double ricker(double t, double f_e) {
  const double ts = 2.0 * std::sqrt(6.0) / (M_PI * f_e);
  const double q = M_PI * f_e * (t - ts);
  return (1.0 - 2.0 * q * q) * std::exp(-q * q);
}

VectorXd force_at(const VectorXd& F_s, double t, double f_e) { return ricker(t, f_e) * F_s; }

VectorXd spatial_load(const DiscreteSystem& sys, const Grid& grid, const SourceSpec& src,
                      const LoadOptions& opts) {
  if (!(src.sigma_s > 0.0) || !(src.f_e > 0.0))
    throw ConfigError("source sigma_s and f_e must be positive");
  if (opts.extra_points < 0) throw ConfigError("load extra_points must be >= 0");
  const BasisSpec& spec = grid.spec();
  const DofMap dofs(grid);
  if (dofs.n_dof() != sys.n_dof) throw ConfigError("spatial_load: grid/system mismatch");
  const int q = spec.p + 1 + opts.extra_points;
  const ElementRule uncut = tensor_rule(gl_rule<double>(q));
  const Vec3 xs = grid.from_local(src.x_l_local);
  const double reach = opts.cutoff * src.sigma_s;
  const double rho = sys.material.rho;

  VectorXd F = VectorXd::Zero(sys.n_dof);
  for (int e : grid.kept_elements()) {
    const Box box = grid.element_box(e);
    const Vec3 nearest = xs.cwiseMax(box.lo).cwiseMin(box.hi);
    if ((nearest - xs).norm() > reach) continue;
    const ElementClass cls = grid.element_class(e);
    const ElementRule rule = cls == ElementClass::Cut
                                 ? cut_cell_rule(box, *grid.geometry(), q,
                                                 opts.octree_depth, opts.alpha)
                                 : uncut;
    const ElementBasis basis(spec, grid.element_index(e));
    const Vec3 h = box.extent();
    const double jac = h.prod() / 8.0;
    VectorXd Fe = VectorXd::Zero(basis.nb() * basis.nb() * basis.nb());
    for (const QuadBlock& b : rule.blocks) {
      const Eigen::Index q0 = b.xi[0].size(), q1 = b.xi[1].size(), q2 = b.xi[2].size();
      VectorXd G(q0 * q1 * q2);
      Vec3 x;
      for (Eigen::Index k = 0; k < q2; ++k) {
        x[2] = box.lo[2] + 0.5 * (b.xi[2][k] + 1.0) * h[2];
        for (Eigen::Index j = 0; j < q1; ++j) {
          x[1] = box.lo[1] + 0.5 * (b.xi[1][j] + 1.0) * h[1];
          for (Eigen::Index i = 0; i < q0; ++i) {
            x[0] = box.lo[0] + 0.5 * (b.xi[0][i] + 1.0) * h[0];
            const Eigen::Index idx = i + q0 * (j + q1 * k);
            G[idx] = b.w[0][i] * b.w[1][j] * b.w[2][k] * b.alpha[idx] *
                     src.spatial(grid.to_local(x));
          }
        }
      }
      MatrixXd V0, V1, V2, D;
      basis.tabulate(0, b.xi[0], V0, D);
      basis.tabulate(1, b.xi[1], V1, D);
      basis.tabulate(2, b.xi[2], V2, D);
      Fe += tensor_contract(G, V0, V1, V2);
    }
    Fe *= rho * jac;
    const std::vector<int> ed = dofs.element_dofs(e);
    for (std::size_t i = 0; i < ed.size(); ++i) F[ed[i]] += Fe[static_cast<Eigen::Index>(i)];
  }
  return F;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> observation_matrix(
    const Grid& grid, const DofMap& dofs, const std::vector<Vec3>& points_local) {
  std::vector<Eigen::Triplet<double>> t;
  const BasisSpec& spec = grid.spec();
  for (std::size_t r = 0; r < points_local.size(); ++r) {
    const Vec3 x = grid.from_local(points_local[r]);
    const int e = grid.locate(x);
    if (e < 0) throw ConfigError("observation point " + std::to_string(r) +
                                 " lies outside the discretized domain");
    const Box box = grid.element_box(e);
    const Vec3 xi = (-1.0 + 2.0 * (x - box.lo).array() / box.extent().array())
                        .cwiseMax(-1.0)
                        .cwiseMin(1.0)
                        .matrix();
    const ElementBasis basis(spec, grid.element_index(e));
    const BasisValues1D<double> b0 = basis.eval(0, xi[0]), b1 = basis.eval(1, xi[1]),
                                b2 = basis.eval(2, xi[2]);
    const std::vector<int> ed = dofs.element_dofs(e);
    const int nb = basis.nb();
    for (int c = 0; c < nb; ++c)
      for (int b = 0; b < nb; ++b)
        for (int a = 0; a < nb; ++a) {
          const double v = b0.values[a] * b1.values[b] * b2.values[c];
          const int d = ed[static_cast<std::size_t>(a + nb * (b + nb * c))];
          if (v != 0.0 && d >= 0) t.emplace_back(static_cast<int>(r), d, v);
        }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> H(static_cast<Eigen::Index>(points_local.size()),
                                                  dofs.n_dof());
  H.setFromTriplets(t.begin(), t.end());
  return H;
}

}  // namespace fcmwave
