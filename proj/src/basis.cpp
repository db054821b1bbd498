#include "fcmwave/basis.hpp"

namespace fcmwave {

const char* to_string(BasisFamily f) {
  return f == BasisFamily::GllLagrange ? "gll" : "bspline";
}

BasisFamily basis_family_from_string(const std::string& s) {
  if (s == "gll" || s == "lagrange" || s == "scm") return BasisFamily::GllLagrange;
  if (s == "bspline" || s == "iga") return BasisFamily::BSpline;
  throw ConfigError("unknown basis family '" + s + "' (expected gll|bspline)");
}

void BasisSpec::validate() const {
  if (p < 1) throw ConfigError("basis: p must be >= 1");
  if (n_e < 1) throw ConfigError("basis: n_e must be >= 1");
}

}  // namespace fcmwave
