#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "fcmwave/assembly.hpp"
#include "fcmwave/stabilization.hpp"

using namespace fcmwave;

namespace {

Eigen::MatrixXd consistent_1d(double rho, double h) {
  return rho * h / 6.0 * Eigen::MatrixXd{{2, 1}, {1, 2}};
}

double lambda_min(const Eigen::MatrixXd& A) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().minCoeff();
}

// Element with the smallest physical volume fraction among cut elements.
ElementMatrices worst_cut_element(const Grid& grid, double alpha) {
  const ImmersedGeometry& g = *grid.geometry();
  const BasisSpec& spec = grid.spec();
  int worst = -1;
  double smallest = 9.0;
  for (int e : grid.kept_elements()) {
    if (grid.element_class(e) != ElementClass::Cut) continue;
    const double v = indicator_volume(cut_cell_rule(grid.element_box(e), g, 2, 3, 0.0));
    if (v > 0.0 && v < smallest) {
      smallest = v;
      worst = e;
    }
  }
  const ElementRule r = cut_cell_rule(grid.element_box(worst), g, spec.p + 1, 4, alpha);
  return element_matrices(ElementBasis(spec, grid.element_index(worst)), spec.family, grid.h(), r, r, {});
}

}  // namespace

TEST(AlphaCombine, Examples) {
  const Eigen::MatrixXd Mo = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd Mf = 3.0 * Eigen::MatrixXd::Identity(2, 2);
  EXPECT_EQ(alpha_combine(Mo, Mf, 0.0), Mo);
  EXPECT_EQ(alpha_combine(Mo, Mf, 1.0), Mf);
  EXPECT_EQ(alpha_combine(Mo, Mf, 0.5), 2.0 * Mo);
  EXPECT_THROW(alpha_combine(Mo, Eigen::MatrixXd::Identity(3, 3), 0.5), ConfigError);
}

TEST(Evs, HandComputedTwoByTwo) {
  const Eigen::MatrixXd Mo{{1.0, 0.0}, {0.0, 1e-8}};
  const Eigen::MatrixXd Mf{{2.0, 0.5}, {0.5, 1.0}};
  const Eigen::MatrixXd Me = evs_stabilize(Mo, Mf, 1e-2, 1e-4);
  const Eigen::MatrixXd expected{{1.0, 0.0}, {0.0, 1e-8 + 2e-2}};
  EXPECT_EQ(Me, expected);
  EXPECT_EQ(evs_stabilize(Mo, Mf, 0.0, 1e-4), Mo);
  EXPECT_EQ(evs_stabilize(Mo, Mf, 1e-2, 1e-12), Mo);
  EXPECT_THROW(evs_stabilize(Mo, Mf, -1.0, 1e-4), ConfigError);
}

TEST(Evs, DecompositionReconstructsAndSplits) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n;
  Eigen::MatrixXd B(12, 12);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = n(rng);
  Eigen::VectorXd s(12);
  for (int i = 0; i < 12; ++i) s[i] = std::pow(10.0, -i);
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(B).householderQ();
  const Eigen::MatrixXd A = Q * s.asDiagonal() * Q.transpose();
  const auto d = evs_decompose(A, 3e-3);
  const Eigen::MatrixXd R = d.Phi_s * d.Lambda_s.asDiagonal() * d.Phi_s.transpose() +
                            d.Phi_l * d.Lambda_l.asDiagonal() * d.Phi_l.transpose();
  EXPECT_LT((R - A).norm(), 1e-9 * A.norm());
  EXPECT_EQ(d.Lambda_l.size(), 3);
  EXPECT_LT(d.Lambda_s.maxCoeff(), 3e-3 * d.Lambda_l.maxCoeff());
  EXPECT_GE(d.Lambda_l.minCoeff(), 3e-3 * d.Lambda_l.maxCoeff());
}

TEST(Evs, MonotoneInEpsilonOnBadlyCutElement) {
  const Grid grid = Grid::immersed(ImmersedGeometry::benchmark(), {BasisFamily::GllLagrange, 3, 10});
  const ElementMatrices em = worst_cut_element(grid, 1e-12);
  double prev = lambda_min(em.M_o);
  for (double eps : {1e-6, 1e-4, 1e-2}) {
    const Eigen::MatrixXd Me = evs_stabilize(em.M_o, em.M_f, eps, 1e-2);
    EXPECT_LT((Me - Me.transpose()).cwiseAbs().maxCoeff(), 1e-15 * Me.cwiseAbs().maxCoeff());
    const double l = lambda_min(Me);
    EXPECT_GE(l, prev * (1.0 - 1e-6));
    prev = l;
  }
  EXPECT_GT(prev, 10.0 * lambda_min(em.M_o));
}

TEST(Evs, IdempotentOnWellConditionedMatrices) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(6, 6);
    for (int i = 0; i < 6; ++i) A(i, i) = u(rng);
    const Eigen::MatrixXd Me = evs_stabilize(A, 3.0 * A, 0.1, 0.4);
    EXPECT_EQ(Me, A);
  }
}

TEST(Lumping, RowSumExamples) {
  EXPECT_EQ(Eigen::MatrixXd(row_sum_lump(Eigen::MatrixXd::Identity(3, 3)).toDenseMatrix()),
            Eigen::MatrixXd::Identity(3, 3));
  const double rho = 2.0, h = 0.3;
  const Eigen::MatrixXd M = consistent_1d(rho, h);
  const Eigen::VectorXd d = row_sum_lump(M).diagonal();
  EXPECT_NEAR(d[0], rho * h / 2, 1e-15);
  EXPECT_NEAR(d[1], rho * h / 2, 1e-15);
  std::mt19937_64 rng(43);
  std::normal_distribution<double> n;
  Eigen::MatrixXd R(7, 7);
  for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = n(rng);
  R = R + R.transpose().eval();
  EXPECT_EQ(Eigen::VectorXd(row_sum_lump(R).diagonal()), Eigen::VectorXd(R * Eigen::VectorXd::Ones(7)));
}

TEST(Lumping, HrzExamples) {
  const Eigen::MatrixXd D = Eigen::Vector3d(1, 2, 3).asDiagonal();
  EXPECT_EQ(Eigen::MatrixXd(hrz_lump(D, 6.0).toDenseMatrix()), D);
  const double rho = 2.0, h = 0.3;
  const Eigen::MatrixXd M = consistent_1d(rho, h);
  EXPECT_NEAR(M.diagonal().sum(), 2 * rho * h / 3, 1e-15);
  const Eigen::VectorXd d = hrz_lump(M, rho * h).diagonal();
  EXPECT_NEAR(d[0], rho * h / 2, 1e-15);
  EXPECT_NEAR(d[1], rho * h / 2, 1e-15);
  EXPECT_LT((d - row_sum_lump(M).diagonal()).norm(), 1e-15);
  EXPECT_THROW(hrz_lump(M, -1.0), ConfigError);
}

TEST(Lumping, HrzConservesCutElementMass) {
  const Grid grid = Grid::immersed(ImmersedGeometry::benchmark(), {BasisFamily::BSpline, 3, 6});
  const ElementMatrices em = worst_cut_element(grid, 1e-4);
  const double m_e = em.M_o.sum();
  const Eigen::VectorXd d = hrz_lump(em.M_o, m_e).diagonal();
  EXPECT_NEAR(d.sum(), m_e, 1e-12 * m_e);
  EXPECT_TRUE((d.array() > 0).all());
}

TEST(ApplyStabilization, PipelineRules) {
  const Grid grid = Grid::immersed(ImmersedGeometry::benchmark(), {BasisFamily::GllLagrange, 3, 6});
  const ElementMatrices cut = worst_cut_element(grid, 1e-12);
  StabilizationParams p;
  p.alpha = 1e-12;
  const StabilizedMass plain = apply_stabilization(cut.M_o, cut.M_f, ElementClass::Cut,
                                                   BasisFamily::GllLagrange, false, p);
  EXPECT_EQ(plain.M, cut.M_o);
  EXPECT_FALSE(plain.diagonal);

  p.epsilon = 1e-4;
  const StabilizedMass evs = apply_stabilization(cut.M_o, cut.M_f, ElementClass::Cut,
                                                 BasisFamily::GllLagrange, false, p);
  EXPECT_EQ(evs.M, evs_stabilize(cut.M_o, cut.M_f, 1e-4, p.f_lambda));
  // EVS never touches uncut elements.
  const StabilizedMass inside = apply_stabilization(cut.M_f, cut.M_f, ElementClass::Inside,
                                                    BasisFamily::BSpline, false, p);
  EXPECT_EQ(inside.M, cut.M_f);

  p.epsilon = 0.0;
  p.lumping = Lumping::HRZ;
  const Eigen::MatrixXd D = Eigen::VectorXd::LinSpaced(64, 1, 2).asDiagonal();
  const StabilizedMass nodal = apply_stabilization(D, D, ElementClass::Inside,
                                                   BasisFamily::GllLagrange, true, p);
  EXPECT_EQ(nodal.M, D);
  EXPECT_TRUE(nodal.diagonal);
  const StabilizedMass hrz = apply_stabilization(cut.M_o, cut.M_f, ElementClass::Cut,
                                                 BasisFamily::GllLagrange, false, p);
  EXPECT_TRUE(hrz.diagonal);
  EXPECT_NEAR(hrz.M.sum(), cut.M_o.sum(), 1e-12 * cut.M_o.sum());

  p.lumping = Lumping::RowSum;
  const StabilizedMass rs = apply_stabilization(cut.M_f, cut.M_f, ElementClass::Inside,
                                                BasisFamily::BSpline, false, p);
  EXPECT_TRUE(rs.diagonal);
  for (Eigen::Index i = 0; i < cut.M_f.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < cut.M_f.cols(); ++j) row += cut.M_f(i, j);
    EXPECT_EQ(rs.M.diagonal()[i], row);
  }
}

TEST(ApplyStabilization, GlobalRowSumEqualsConsistentTimesOne) {
  const Grid grid = Grid::immersed(ImmersedGeometry::benchmark(), {BasisFamily::BSpline, 2, 6});
  AssemblyOptions opts;
  opts.assemble_stiffness = false;
  const SparseSym M = assemble(grid, opts).M;
  opts.stabilization.lumping = Lumping::RowSum;
  const SparseSym L = assemble(grid, opts).M;
  EXPECT_TRUE(is_structurally_diagonal(L));
  const Eigen::VectorXd r = M * Eigen::VectorXd::Ones(M.rows());
  EXPECT_LT((Eigen::VectorXd(L.diagonal()) - r).cwiseAbs().maxCoeff(), 1e-14 * r.cwiseAbs().maxCoeff());
}

TEST(Params, Validation) {
  StabilizationParams p;
  p.alpha = 0.0;
  p.epsilon = 1e-4;
  EXPECT_THROW(p.validate(), ConfigError);
  p.alpha = 2.0;
  p.epsilon = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p.alpha = 1e-8;
  p.f_lambda = 1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_EQ(lumping_from_string(to_string(Lumping::HRZ)), Lumping::HRZ);
  EXPECT_THROW(lumping_from_string("bogus"), ConfigError);
}
