#include "fcmwave/stabilization.hpp"

namespace fcmwave {

const char* to_string(Lumping l) {
  switch (l) {
    case Lumping::None: return "none";
    case Lumping::RowSum: return "rowsum";
    case Lumping::HRZ: return "hrz";
  }
  return "?";
}

Lumping lumping_from_string(const std::string& s) {
  if (s == "none" || s == "consistent") return Lumping::None;
  if (s == "rowsum" || s == "row_sum") return Lumping::RowSum;
  if (s == "hrz") return Lumping::HRZ;
  throw ConfigError("unknown lumping '" + s + "' (expected none|rowsum|hrz)");
}

void StabilizationParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  if (!(f_lambda > 0.0 && f_lambda < 1.0)) throw ConfigError("f_lambda must lie in (0, 1)");
  if (epsilon > 0.0 && alpha == 0.0)
    throw ConfigError("epsilon-stabilization requires alpha > 0");
}

StabilizedMass apply_stabilization(const Eigen::MatrixXd& M_o,
                                   const Eigen::MatrixXd& M_f, ElementClass cls,
                                   BasisFamily family, bool nodal_diagonal,
                                   const StabilizationParams& params) {
  StabilizedMass out{M_o, nodal_diagonal};
  if (nodal_diagonal) return out;
  const bool cut = cls == ElementClass::Cut;
  if (cut && params.epsilon > 0.0)
    out.M = evs_stabilize(M_o, M_f, params.epsilon, params.f_lambda);

  const bool lump = params.lumping != Lumping::None &&
                    (family == BasisFamily::BSpline || cut);
  if (!lump) return out;
  if (params.lumping == Lumping::RowSum) {
    out.M = Eigen::MatrixXd(row_sum_lump(out.M));
  } else {
    const double m_e = out.M.sum();
    out.M = Eigen::MatrixXd(hrz_lump(out.M, m_e));
  }
  out.diagonal = true;
  return out;
}

}  // namespace fcmwave
