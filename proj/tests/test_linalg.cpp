#include <gtest/gtest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <random>

#include <Eigen/Eigenvalues>

#include "fcmwave/assembly.hpp"
#include "fcmwave/linalg.hpp"

using namespace fcmwave;

namespace {

SparseSym sparse(const Eigen::MatrixXd& A) { return A.sparseView(); }

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double shift = 1.0) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd B(n, n);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
  return B * B.transpose() + shift * Eigen::MatrixXd::Identity(n, n);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("fcmwave_" + name)).string();
}

}  // namespace

TEST(Spmv, IdentityAndDenseOracle) {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> g;
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, -1, 3);
  EXPECT_EQ(spmv(sparse(Eigen::MatrixXd::Identity(5, 5)), x), x);
  Eigen::MatrixXd A(5, 5);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
  A = (A + A.transpose()).eval();
  const SparseSym S = sparse(A);
  const Eigen::VectorXd y = spmv(S, x);
  EXPECT_LT((y - A * x).cwiseAbs().maxCoeff(), 1e-14);
  Eigen::VectorXd y2(5);
  spmv(S, x, y2);
  EXPECT_EQ(std::memcmp(y.data(), y2.data(), 5 * sizeof(double)), 0);
  EXPECT_THROW(spmv(S, Eigen::VectorXd::Ones(4)), ConfigError);
}

TEST(Spmv, AssembledStiffnessKernel) {
  const Grid grid = Grid::immersed(ImmersedGeometry::benchmark(), {BasisFamily::GllLagrange, 2, 5});
  const DiscreteSystem sys = assemble(grid, {});
  const Eigen::VectorXd y = spmv(sys.K, Eigen::VectorXd::Ones(sys.n_dof));
  EXPECT_LT(y.norm(), 1e-10 * Eigen::MatrixXd(sys.K).norm());
}

TEST(Structure, DiagonalAndSymmetry) {
  EXPECT_TRUE(is_structurally_diagonal(sparse(Eigen::Vector3d(1, 2, 3).asDiagonal().toDenseMatrix())));
  const Eigen::MatrixXd A{{2, 1}, {1, 2}};
  EXPECT_FALSE(is_structurally_diagonal(sparse(A)));
  EXPECT_TRUE(is_structurally_symmetric(sparse(A)));
  EXPECT_EQ(symmetry_defect(sparse(A)), 0.0);
  const Eigen::MatrixXd B{{2, 1}, {0.5, 2}};
  EXPECT_DOUBLE_EQ(symmetry_defect(sparse(B)), 0.5);
  EXPECT_FALSE(is_structurally_symmetric(sparse(Eigen::MatrixXd{{1, 1}, {0, 1}})));
}

TEST(Factorization, HandCases) {
  const Factorization d = Factorization::factorize(sparse(4.0 * Eigen::MatrixXd::Identity(3, 3)));
  EXPECT_TRUE(d.is_diagonal());
  EXPECT_EQ(d.solve(Eigen::Vector3d(4, 8, 12)), Eigen::VectorXd(Eigen::Vector3d(1, 2, 3)));
  const Factorization f = Factorization::factorize(sparse(Eigen::MatrixXd{{2, 1}, {1, 2}}));
  EXPECT_FALSE(f.is_diagonal());
  EXPECT_LT((f.solve(Eigen::Vector2d(3, 3)) - Eigen::Vector2d(1, 1)).norm(), 1e-15);
  Eigen::VectorXd b = Eigen::Vector2d(3, 3);
  f.solve_in_place(b);
  EXPECT_LT((b - Eigen::Vector2d(1, 1)).norm(), 1e-15);
}

TEST(Factorization, RejectsIndefinite) {
  EXPECT_THROW(Factorization::factorize(sparse(Eigen::MatrixXd{{1, 2}, {2, 1}})), FactorizationError);
  EXPECT_THROW(Factorization::factorize(sparse(Eigen::Vector2d(1, -1).asDiagonal().toDenseMatrix())),
               FactorizationError);
}

TEST(Factorization, ResidualOnAssembledMass) {
  const Grid grid = Grid::immersed(ImmersedGeometry::benchmark(), {BasisFamily::GllLagrange, 2, 5});
  AssemblyOptions opts;
  opts.assemble_stiffness = false;
  const DiscreteSystem sys = assemble(grid, opts);
  std::mt19937_64 rng(52);
  std::normal_distribution<double> g;
  Eigen::VectorXd b(sys.n_dof);
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = g(rng);
  const Factorization f = Factorization::factorize(sys.M);
  const Eigen::VectorXd x = f.solve(b);
  const double normA = Eigen::MatrixXd(sys.M).norm();
  EXPECT_LE((sys.M * x - b).norm(), 1e-10 * (normA * x.norm() + b.norm()));
}

TEST(PowerIteration, HandCases) {
  const SparseSym K = sparse(Eigen::Vector3d(1, 2, 3).asDiagonal().toDenseMatrix());
  const SparseSym I = sparse(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_NEAR(max_gen_eig(K, I).lambda, 3.0, 3e-9);

  const double c = 2.0, h = 0.1;
  const Eigen::MatrixXd Ke = c * c / h * Eigen::MatrixXd{{1, -1}, {-1, 1}};
  const Eigen::MatrixXd Mc = h / 6 * Eigen::MatrixXd{{2, 1}, {1, 2}};
  const Eigen::MatrixXd Ml = h / 2 * Eigen::MatrixXd::Identity(2, 2);
  EXPECT_NEAR(max_gen_eig(sparse(Ke), sparse(Mc)).lambda, 12 * c * c / (h * h), 1e-6);
  EXPECT_NEAR(max_gen_eig(sparse(Ke), sparse(Ml)).lambda, 4 * c * c / (h * h), 1e-6);
  EXPECT_NEAR(dt_crit(sparse(Ke), sparse(Mc)), h / (c * std::sqrt(3.0)), 1e-10);
  EXPECT_NEAR(dt_crit(sparse(Ke), sparse(Ml)), h / c, 1e-10);
  EXPECT_EQ(dt_crit_from_lambda(4.0), 1.0);
}

TEST(PowerIteration, DenseOracle) {
  std::mt19937_64 rng(53);
  for (int n : {10, 50, 200}) {
    const Eigen::MatrixXd K = random_spd(n, rng, 0.0);
    const Eigen::MatrixXd M = random_spd(n, rng, double(n));
    const double oracle =
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd>(K, M).eigenvalues().maxCoeff();
    const EigenEstimate est = max_gen_eig(sparse(K), sparse(M), 1e-12, 200000);
    EXPECT_NEAR(est.lambda, oracle, 1e-8 * oracle) << "n=" << n;
    EXPECT_GT(est.iterations, 1);
  }
}

TEST(PowerIteration, SeededAndLimited) {
  std::mt19937_64 rng(54);
  const Eigen::MatrixXd K = random_spd(30, rng, 0.0);
  const SparseSym I = sparse(Eigen::MatrixXd::Identity(30, 30));
  const EigenEstimate a = max_gen_eig(sparse(K), I, 1e-9, 100000, 7);
  const EigenEstimate b = max_gen_eig(sparse(K), I, 1e-9, 100000, 7);
  EXPECT_EQ(a.lambda, b.lambda);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_THROW(max_gen_eig(sparse(K), I, 1e-15, 2, 7), IterationLimitError);
}

TEST(Jacobi, Examples) {
  const auto d = jacobi_eig(Eigen::Vector3d(3, 1, 2).asDiagonal().toDenseMatrix());
  EXPECT_EQ(d.values, Eigen::VectorXd(Eigen::Vector3d(1, 2, 3)));
  EXPECT_EQ(d.vectors.cwiseAbs().colwise().sum(), Eigen::RowVector3d(1, 1, 1));
  const auto e = jacobi_eig(Eigen::MatrixXd{{2, 1}, {1, 2}});
  EXPECT_NEAR(e.values[0], 1.0, 1e-15);
  EXPECT_NEAR(e.values[1], 3.0, 1e-15);
  const double s = 1 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), s, 1e-15);
  EXPECT_NEAR(e.vectors(0, 0), -e.vectors(1, 0), 1e-15);
  EXPECT_NEAR(e.vectors(0, 1), e.vectors(1, 1), 1e-15);
}

TEST(Jacobi, ReconstructsRandomSymmetric) {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> g;
  for (int k = 0; k < 5; ++k) {
    Eigen::MatrixXd A(30, 30);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
    A = (A + A.transpose()).eval();
    const auto d = jacobi_eig(A);
    EXPECT_LT((d.vectors * d.values.asDiagonal() * d.vectors.transpose() - A).norm(), 1e-10 * A.norm());
    EXPECT_LT((d.vectors.transpose() * d.vectors - Eigen::MatrixXd::Identity(30, 30)).norm(), 1e-12);
    for (Eigen::Index i = 1; i < 30; ++i) EXPECT_LE(d.values[i - 1], d.values[i]);
  }
}

TEST(MatrixMarket, RoundTrip) {
  const Grid grid = Grid::immersed(ImmersedGeometry::benchmark(), {BasisFamily::BSpline, 2, 4});
  const DiscreteSystem sys = assemble(grid, {});
  const std::string path = temp_path("K.mtx");
  write_matrix_market(path, sys.K);
  const SparseSym R = read_matrix_market(path);
  ASSERT_EQ(R.rows(), sys.K.rows());
  EXPECT_EQ(R.nonZeros(), sys.K.nonZeros());
  EXPECT_EQ(Eigen::MatrixXd(R - sys.K).cwiseAbs().maxCoeff(), 0.0);
  std::remove(path.c_str());
  EXPECT_THROW(read_matrix_market(temp_path("missing.mtx")), ConfigError);
}
