#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <string>

#include "fcmwave/errors.hpp"

namespace fcmwave {

enum class BasisFamily { GllLagrange, BSpline };

const char* to_string(BasisFamily f);
BasisFamily basis_family_from_string(const std::string& s);

struct BasisSpec {
  BasisFamily family = BasisFamily::GllLagrange;
  int p = 3;
  int n_e = 10;

  /// GLL-Lagrange: n_e*p + 1 nodes; open uniform B-spline: n_e + p.
  int functions_per_direction() const {
    return family == BasisFamily::GllLagrange ? n_e * p + 1 : n_e + p;
  }
  int functions_per_element() const { return (p + 1) * (p + 1) * (p + 1); }
  void validate() const;
};

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One-dimensional quadrature rule on [-1, 1].
template <typename Scalar = double>
struct Rule1D {
  VectorX<Scalar> nodes;
  VectorX<Scalar> weights;

  Eigen::Index size() const { return nodes.size(); }
};

namespace detail {

/// Legendre P_n and P_n' at x via the three-term recurrence.
template <typename Scalar>
void legendre(int n, Scalar x, Scalar& p, Scalar& dp) {
  Scalar p0 = 1, p1 = x;
  if (n == 0) {
    p = 1;
    dp = 0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  p = p1;
  // (1 - x^2) P_n' = n (P_{n-1} - x P_n); only used away from +-1.
  dp = n * (p0 - x * p1) / (1 - x * x);
}

inline constexpr int kNewtonMaxIter = 100;
inline constexpr double kNewtonTol = 1e-15;

}  // namespace detail

/// Gauss-Legendre rule with q points; exact for degree <= 2q - 1.
template <typename Scalar = double>
Rule1D<Scalar> gl_rule(int q) {
  if (q < 1) throw ConfigError("gl_rule: q must be >= 1");
  Rule1D<Scalar> r;
  r.nodes.resize(q);
  r.weights.resize(q);
  if (q == 1) {
    r.nodes << 0;
    r.weights << 2;
    return r;
  }
  if (q == 2) {
    const Scalar a = 1 / std::sqrt(Scalar(3));
    r.nodes << -a, a;
    r.weights << 1, 1;
    return r;
  }
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (int i = 0; i < q; ++i) {
    // Roots ordered decreasingly by the initial guess; stored increasing.
    Scalar x = std::cos(pi * (i + Scalar(0.75)) / (q + Scalar(0.5)));
    Scalar p, dp;
    for (int it = 0; it < detail::kNewtonMaxIter; ++it) {
      detail::legendre(q, x, p, dp);
      const Scalar dx = p / dp;
      x -= dx;
      if (std::abs(dx) < detail::kNewtonTol) break;
    }
    detail::legendre(q, x, p, dp);
    r.nodes[q - 1 - i] = x;
    r.weights[q - 1 - i] = 2 / ((1 - x * x) * dp * dp);
  }
  return r;
}

/// Gauss-Lobatto-Legendre rule with p + 1 points: +-1 and the roots of P_p'.
/// Exact for degree <= 2p - 1.
template <typename Scalar = double>
Rule1D<Scalar> gll_rule(int p) {
  if (p < 1) throw ConfigError("gll_rule: p must be >= 1");
  Rule1D<Scalar> r;
  r.nodes.resize(p + 1);
  r.weights.resize(p + 1);
  if (p == 1) {
    r.nodes << -1, 1;
    r.weights << 1, 1;
    return r;
  }
  if (p == 2) {
    r.nodes << -1, 0, 1;
    r.weights << Scalar(1) / 3, Scalar(4) / 3, Scalar(1) / 3;
    return r;
  }
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar end_weight = Scalar(2) / (p * (p + 1));
  r.nodes[0] = -1;
  r.nodes[p] = 1;
  r.weights[0] = r.weights[p] = end_weight;
  for (int i = 1; i < p; ++i) {
    // Chebyshev-Gauss-Lobatto initial guess, increasing in i.
    Scalar x = -std::cos(pi * i / p);
    Scalar P, dP;
    for (int it = 0; it < detail::kNewtonMaxIter; ++it) {
      detail::legendre(p, x, P, dP);
      // P'' from the Legendre equation.
      const Scalar d2P = (2 * x * dP - p * (p + 1) * P) / (1 - x * x);
      const Scalar dx = dP / d2P;
      x -= dx;
      if (std::abs(dx) < detail::kNewtonTol) break;
    }
    detail::legendre(p, x, P, dP);
    r.nodes[i] = x;
    r.weights[i] = end_weight / (P * P);
  }
  return r;
}

template <typename Scalar = double>
struct BasisValues1D {
  int span = -1;  // knot span index for B-splines, -1 otherwise
  VectorX<Scalar> values;
  VectorX<Scalar> derivatives;
};

/// Lagrange polynomials through `nodes`, evaluated with derivatives at xi.
template <typename Derived>
BasisValues1D<typename Derived::Scalar> lagrange_eval(
    const Eigen::MatrixBase<Derived>& nodes, typename Derived::Scalar xi) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = nodes.size();
  BasisValues1D<Scalar> out;
  out.values.resize(n);
  out.derivatives.setZero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Scalar v = 1;
    for (Eigen::Index k = 0; k < n; ++k)
      if (k != i) v *= (xi - nodes[k]) / (nodes[i] - nodes[k]);
    out.values[i] = v;
    Scalar d = 0;
    for (Eigen::Index m = 0; m < n; ++m) {
      if (m == i) continue;
      Scalar t = 1 / (nodes[i] - nodes[m]);
      for (Eigen::Index k = 0; k < n; ++k)
        if (k != i && k != m) t *= (xi - nodes[k]) / (nodes[i] - nodes[k]);
      d += t;
    }
    out.derivatives[i] = d;
  }
  return out;
}

/// Open uniform knot vector on [a, b]: p+1 repeated end knots and n_e - 1
/// single interior knots.
template <typename Scalar = double>
VectorX<Scalar> open_uniform_knots(int n_e, int p, Scalar a, Scalar b) {
  if (n_e < 1 || p < 0) throw ConfigError("open_uniform_knots: bad n_e or p");
  VectorX<Scalar> U(n_e + 2 * p + 1);
  for (int i = 0; i <= p; ++i) {
    U[i] = a;
    U[n_e + p + i] = b;
  }
  for (int i = 1; i < n_e; ++i) U[p + i] = a + (b - a) * Scalar(i) / n_e;
  return U;
}

/// Basis values on a given knot span (Cox-de Boor, derivatives by the
/// standard difference formula). Returns the p+1 nonzero functions
/// N_{span-p} .. N_{span}.
template <typename Derived>
BasisValues1D<typename Derived::Scalar> bspline_eval_span(
    const Eigen::MatrixBase<Derived>& U, int p, int span,
    typename Derived::Scalar u) {
  using Scalar = typename Derived::Scalar;
  BasisValues1D<Scalar> out;
  out.span = span;
  out.values.setZero(p + 1);
  out.derivatives.setZero(p + 1);
  // ndu(j, r): upper triangle holds basis values of increasing degree,
  // lower triangle the knot differences.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ndu(p + 1, p + 1);
  VectorX<Scalar> left(p + 1), right(p + 1);
  ndu(0, 0) = 1;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - U[span + 1 - j];
    right[j] = U[span + j] - u;
    Scalar saved = 0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const Scalar temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }
  for (int j = 0; j <= p; ++j) out.values[j] = ndu(j, p);
  if (p == 0) return out;
  for (int r = 0; r <= p; ++r) {
    Scalar d = 0;
    // First derivative: p * (N_{r,p-1}/(u_{i+p}-u_i) - N_{r+1,p-1}/(...)).
    if (r >= 1) d += ndu(r - 1, p - 1) / ndu(p, r - 1);
    if (r <= p - 1) d -= ndu(r, p - 1) / ndu(p, r);
    out.derivatives[r] = p * d;
  }
  return out;
}

/// Finds the knot span containing u (the last non-degenerate span at the
/// right end) and evaluates the nonzero functions there.
template <typename Derived>
BasisValues1D<typename Derived::Scalar> bspline_eval(
    const Eigen::MatrixBase<Derived>& U, int p, typename Derived::Scalar u) {
  const int m = static_cast<int>(U.size()) - 1;
  const int n = m - p - 1;  // index of last basis function
  if (u < U[p] || u > U[n + 1])
    throw ConfigError("bspline_eval: parameter outside knot range");
  int span = n;
  if (u < U[n + 1]) {
    int lo = p, hi = n + 1;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      if (u < U[mid])
        hi = mid;
      else
        lo = mid;
    }
    span = lo;
  }
  return bspline_eval_span(U, p, span, u);
}

}  // namespace fcmwave
