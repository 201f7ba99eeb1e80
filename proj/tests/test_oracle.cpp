#include <gtest/gtest.h>

#include "test_support.hpp"

#include <pnkrylov/verify/oracle.hpp>

using namespace pnk;
using pnk::testing::rel_diff;

TEST(DenseKKT, HandComputedTwoByTwo) {
  verify::DenseProblem d{Matrix::Identity(2, 2), Matrix::Identity(2, 2), Vector{{1.0, 0.0}}, 0.5};
  const Vector x{{0.5, 0.0}};
  const auto kkt = verify::dense_kkt(d, SmoothPenalty::quadratic(), x, 2.0);
  // λ(x − b) + x = (−0.5, 0), ½(‖x − b‖² − σ²) = 0
  EXPECT_LE((kkt.F - Vector{{-0.5, 0.0, 0.0}}).norm(), 1e-15);
  Matrix j(3, 3);
  j << 3, 0, -0.5, 0, 3, 0, -0.5, 0, 0;
  EXPECT_LE((kkt.J - j).norm(), 1e-15);
}

TEST(DenseKKT, MeritGradientMatchesFiniteDifferences) {
  const auto d = verify::densify(smooth1d_problem(24, 0.1, 3));
  const auto pen = SmoothPenalty::lp(1.0, 1e-3);
  const Vector xl = pnk::testing::random_vector(25, 4).cwiseAbs() + Vector::Constant(25, 0.1);
  auto merit = [&](const Vector& v) { return 0.5 * verify::dense_kkt(d, pen, v.head(24), v[24]).F.squaredNorm(); };
  const Vector fd = pnk::testing::fd_gradient(merit, xl, 1e-6);
  EXPECT_LE(rel_diff(verify::dense_merit_gradient(d, pen, xl.head(24), xl[24]), fd), 1e-5);
}

TEST(FullNewton, QuadraticPenaltySolvesTheKKTSystem) {
  const auto d = verify::densify(smooth1d_problem(64, 0.1, 1));
  const auto sol = verify::full_newton_solve(d, SmoothPenalty::quadratic(), 1e5);
  const auto kkt = verify::dense_kkt(d, SmoothPenalty::quadratic(), sol.x, sol.lambda);
  const Vector scale_ref = -sol.lambda * (d.A.transpose() * d.b);
  EXPECT_LE(kkt.F.head(64).norm(), 1e-9 * scale_ref.norm());
  EXPECT_LE(std::abs((d.A * sol.x - d.b).norm() - d.sigma), 1e-9 * d.sigma);
  EXPECT_NEAR(sol.alpha, 1.0 / sol.lambda, 1e-15 * sol.alpha);
}

TEST(FullNewton, AgreesWithBisectionForTikhonov) {
  const auto d = verify::densify(smooth1d_problem(64, 0.1, 2));
  const auto newton = verify::full_newton_solve(d, SmoothPenalty::quadratic(), 1e5);
  const auto bisect = verify::tikhonov_discrepancy_bisect(d);
  EXPECT_LE(rel_diff(newton.x, bisect.x), 1e-7);
  EXPECT_LE(rel_diff(newton.alpha, bisect.alpha), 1e-7);
}

TEST(FullNewton, SmoothL1ConvergesFromUnitMultiplier) {
  const auto d = verify::densify(spike_problem(64, 0.05, kSpikeBlurBandwidth, 0.1, 2));
  const auto pen = SmoothPenalty::lp(1.0);
  const auto sol = verify::full_newton_solve(d, pen, 1.0);
  EXPECT_GT(sol.lambda, 0.0);
  EXPECT_LE(std::abs((d.A * sol.x - d.b).norm() - d.sigma), 1e-9 * d.sigma);
}

TEST(FullNewton, RefusesLargeProblems) {
  verify::DenseProblem d{Matrix::Identity(600, 600), Matrix::Identity(600, 600), Vector::Ones(600), 1.0};
  EXPECT_THROW(verify::full_newton_solve(d, SmoothPenalty::quadratic(), 1.0), InvalidDimension);
}

TEST(TikhonovBisection, ResidualGrowsWithAlpha) {
  const auto d = verify::densify(smooth1d_problem(48, 0.1, 5));
  double prev = 0.0;
  for (int i = 0; i <= 16; ++i) {
    const double r = verify::tikhonov_residual(d, std::pow(10.0, -8.0 + i));
    EXPECT_GE(r, prev * (1.0 - 1e-12));
    prev = r;
  }
}

TEST(TikhonovBisection, SolutionMeetsTheDiscrepancy) {
  const auto d = verify::densify(smooth1d_problem(48, 0.1, 5));
  const auto sol = verify::tikhonov_discrepancy_bisect(d);
  EXPECT_LE(std::abs((d.A * sol.x - d.b).norm() - d.sigma), 1e-9 * d.sigma);
  const Vector normal = (d.A.transpose() * d.A + sol.alpha * d.L.transpose() * d.L) * sol.x - d.A.transpose() * d.b;
  EXPECT_LE(normal.norm(), 1e-10 * (d.A.transpose() * d.b).norm());
}

TEST(TikhonovBisection, NoBracketThrows) {
  auto d = verify::densify(smooth1d_problem(32, 0.1, 5));
  d.sigma = 2.0 * d.b.norm();
  EXPECT_THROW(verify::tikhonov_discrepancy_bisect(d), DiscrepancyUnreachable);
}

TEST(Lanczos, BasisIsOrthonormalAndSpansPowerSequence) {
  const Matrix a = pnk::testing::random_matrix(30, 20, 6);
  const Vector b = pnk::testing::random_vector(30, 7);
  const Matrix v = verify::lanczos_krylov_basis(a, b, 4);
  EXPECT_LE((v.transpose() * v - Matrix::Identity(4, 4)).norm(), 1e-13);
  Matrix power(20, 4);
  power.col(0) = a.transpose() * b;
  for (Index j = 1; j < 4; ++j) power.col(j) = a.transpose() * (a * power.col(j - 1));
  const Matrix q = Eigen::HouseholderQR<Matrix>(power).householderQ() * Matrix::Identity(20, 4);
  EXPECT_LE(verify::max_principal_angle(q, v), 1e-8);
}

TEST(PrincipalAngle, PlaneRotationAngle) {
  const double t = 0.3;
  Matrix u(2, 1), v(2, 1);
  u << 1.0, 0.0;
  v << std::cos(t), std::sin(t);
  EXPECT_NEAR(verify::max_principal_angle(u, v), t, 1e-14);
  EXPECT_NEAR(verify::max_principal_angle(u, u), 0.0, 1e-15);
}

TEST(ProjectJacobian, IdentityBasisReturnsTheJacobian) {
  const Matrix j = pnk::testing::random_matrix(5, 5, 8);
  EXPECT_EQ(verify::project_jacobian(j, Matrix::Identity(4, 4)), j);
  Matrix e(4, 1);
  e << 0, 1, 0, 0;
  const Matrix p = verify::project_jacobian(j, e);
  EXPECT_EQ(p(0, 0), j(1, 1));
  EXPECT_EQ(p(0, 1), j(1, 4));
  EXPECT_EQ(p(1, 1), j(4, 4));
}

TEST(ConditionNumber, DiagonalMatrix) {
  EXPECT_NEAR(verify::condition_number(Vector{{4.0, 0.5, 2.0}}.asDiagonal().toDenseMatrix()), 8.0, 1e-13);
}
