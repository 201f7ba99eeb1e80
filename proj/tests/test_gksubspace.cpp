#include <gtest/gtest.h>

#include "test_support.hpp"

#include <Eigen/QR>

using namespace pnk;
using pnk::testing::random_matrix;
using pnk::testing::random_vector;

namespace {

double orthonormality_error(const Matrix& q) {
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

OperatorPtr dense_op(const Matrix& m) { return std::make_shared<DenseMatrixOperator>(RowMajorMatrix(m)); }

}  // namespace

TEST(IncrementalQR, FirstColumnIsNormalized) {
  IncrementalQR qr(4, 2);
  const Vector c{{3.0, 0.0, 4.0, 0.0}};
  EXPECT_DOUBLE_EQ(qr.append(c), 5.0);
  EXPECT_DOUBLE_EQ(qr.R()(0, 0), 5.0);
  EXPECT_LE((Vector(qr.Q().col(0)) - c / 5.0).norm(), 1e-16);
  EXPECT_DOUBLE_EQ(qr.gram()(0, 0), 25.0);
}

TEST(IncrementalQR, MatchesFullHouseholderFactorization) {
  const Matrix m = random_matrix(9, 2, 4);
  IncrementalQR qr(9, 2);
  qr.append(m.col(0));
  qr.append(m.col(1));

  const Eigen::HouseholderQR<Matrix> ref(m);
  Matrix r_ref = ref.matrixQR().topRows(2).triangularView<Eigen::Upper>();
  Matrix q_ref = ref.householderQ() * Matrix::Identity(9, 2);
  for (Index i = 0; i < 2; ++i)
    if (r_ref(i, i) < 0.0) {
      r_ref.row(i) *= -1.0;
      q_ref.col(i) *= -1.0;
    }
  EXPECT_LE((Matrix(qr.R()) - r_ref).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((Matrix(qr.Q()) - q_ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IncrementalQR, DependentColumnGetsZeroPivotAndOrthonormalFiller) {
  const Vector c = random_vector(6, 5);
  IncrementalQR qr(6, 3);
  qr.append(c);
  EXPECT_EQ(qr.append(2.0 * c), 0.0);
  EXPECT_EQ(qr.R()(1, 1), 0.0);
  EXPECT_LE(orthonormality_error(qr.Q()), 1e-14);
  Matrix m(6, 2);
  m << c, 2.0 * c;
  EXPECT_LE((Matrix(qr.Q() * qr.R()) - m).cwiseAbs().maxCoeff(), 1e-14 * m.cwiseAbs().maxCoeff());
}

TEST(IncrementalQR, GramMatchesExplicitProductAndGrowsPastCapacity) {
  const Matrix m = random_matrix(12, 5, 6);
  IncrementalQR qr(12, 1);
  for (Index j = 0; j < 5; ++j) qr.append(m.col(j));
  EXPECT_EQ(qr.size(), 5);
  const Matrix gram = qr.gram();
  const Matrix ref = m.transpose() * m;
  EXPECT_LE((gram - ref).norm(), 1e-10 * ref.norm());
  EXPECT_EQ(gram, gram.transpose());
  EXPECT_LE((Matrix(qr.Q() * qr.R()) - m).cwiseAbs().maxCoeff(), 1e-12 * m.cwiseAbs().maxCoeff());
  EXPECT_THROW(qr.append(Vector::Ones(11)), InvalidDimension);
}

TEST(GKSubspace, InitialVectorIsNormalizedAtb) {
  const auto inst = smooth1d_problem(40, 0.1, 1);
  inst.A->reset_counters();
  GKSubspace sub(inst.A, inst.L, inst.b);
  EXPECT_EQ(inst.A->adjoint_count(), 1u);
  EXPECT_EQ(inst.A->forward_count(), 0u);
  EXPECT_EQ(sub.dim(), 1);
  EXPECT_NEAR(sub.V().col(0).norm(), 1.0, 1e-15);
  const Vector atb = inst.A->materialize().transpose() * inst.b;
  EXPECT_NEAR(sub.atb_norm(), atb.norm(), 1e-14 * atb.norm());
  EXPECT_DOUBLE_EQ(sub.d()[0], sub.atb_norm());
  EXPECT_FALSE(sub.synced());
  sub.sync();
  EXPECT_TRUE(sub.synced());
  EXPECT_EQ(inst.A->forward_count(), 1u);
  EXPECT_EQ(inst.A->adjoint_count(), 2u);
}

TEST(GKSubspace, OrthogonalOperatorGivesTransposedUnitVector) {
  const Matrix q = Eigen::HouseholderQR<Matrix>(random_matrix(5, 5, 7)).householderQ();
  Vector e1 = Vector::Zero(5);
  e1[0] = 1.0;
  GKSubspace sub(dense_op(q), identity_operator(5), e1);
  const Vector expected = q.transpose() * e1;
  EXPECT_LE(std::min((Vector(sub.V().col(0)) - expected).norm(), (Vector(sub.V().col(0)) + expected).norm()), 1e-14);
}

TEST(GKSubspace, DataOrthogonalToRangeIsDegenerate) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  EXPECT_THROW(GKSubspace(dense_op(a), identity_operator(2), Vector{{0.0, 1.0}}), DegenerateProblem);
}

TEST(GKSubspace, ExpansionKeepsBasisAndCachesConsistent) {
  const auto inst = smooth1d_problem(50, 0.1, 2);
  GKSubspace sub(inst.A, inst.L, inst.b, SubspaceCaches{true, true, true}, 2);
  sub.sync();
  for (int j = 0; j < 12; ++j) ASSERT_EQ(sub.expand(random_vector(50, 60 + j)), ExpandOutcome::expanded);
  EXPECT_EQ(sub.dim(), 13);

  const Matrix a = inst.A->materialize();
  const Matrix l = inst.L->materialize();
  const Matrix v = sub.V();
  EXPECT_LE(orthonormality_error(v), 1e-10);
  auto rel = [](const Matrix& x, const Matrix& y) { return (x - y).norm() / y.norm(); };
  EXPECT_LE(rel(sub.AV(), a * v), 1e-12);
  EXPECT_LE(rel(sub.AtAV(), a.transpose() * a * v), 1e-12);
  EXPECT_LE(rel(sub.LV(), l * v), 1e-12);
  EXPECT_LE(rel(sub.LtLV(), l.transpose() * l * v), 1e-12);

  const Matrix qa = sub.qr_A().Q(), ra = sub.qr_A().R();
  EXPECT_LE((qa * ra - Matrix(sub.AV())).cwiseAbs().maxCoeff(), 1e-10 * Matrix(sub.AV()).cwiseAbs().maxCoeff());
  EXPECT_LE(orthonormality_error(qa), 1e-10);
  EXPECT_EQ(Matrix(ra.triangularView<Eigen::StrictlyLower>()).norm(), 0.0);
  EXPECT_LE((Matrix(sub.qr_L().Q() * sub.qr_L().R()) - Matrix(sub.LV())).norm(), 1e-10 * l.norm());

  const Vector d = v.transpose() * (a.transpose() * inst.b);
  EXPECT_LE((d - sub.d()).norm(), 1e-10 * d.norm());
  EXPECT_LE((Vector(sub.qtb()) - qa.transpose() * inst.b).norm(), 1e-12 * inst.b.norm());
}

TEST(GKSubspace, EachExpansionCostsOneApplicationPerCachedProduct) {
  const auto inst = smooth1d_problem(30, 0.1, 2);
  for (const auto caches : {SubspaceCaches{true, false, false}, SubspaceCaches{true, true, true},
                            SubspaceCaches{false, false, false}}) {
    GKSubspace sub(inst.A, inst.L, inst.b, caches);
    sub.sync();
    const auto a0 = inst.A->counts();
    const auto l0 = inst.L->counts();
    sub.expand(random_vector(30, 4));
    EXPECT_EQ(inst.A->forward_count() - a0.forward, 1u);
    EXPECT_EQ(inst.A->adjoint_count() - a0.adjoint, caches.normal ? 1u : 0u);
    EXPECT_EQ(inst.L->forward_count() - l0.forward, 1u);
    EXPECT_EQ(inst.L->adjoint_count() - l0.adjoint, caches.reg_normal ? 1u : 0u);
  }
}

TEST(GKSubspace, VectorsInTheSpanDoNotExpand) {
  const auto inst = smooth1d_problem(30, 0.1, 2);
  GKSubspace sub(inst.A, inst.L, inst.b);
  sub.sync();
  sub.expand(random_vector(30, 1));
  const Vector inside = sub.V() * Vector{{0.3, -2.0}};
  EXPECT_EQ(sub.expand(inside), ExpandOutcome::converged_subspace);
  EXPECT_EQ(sub.expand(Vector::Zero(30)), ExpandOutcome::converged_subspace);
  EXPECT_EQ(sub.dim(), 2);
}

TEST(GKSubspace, OrthogonalVectorIsAppendedUnchanged) {
  Matrix a = Matrix::Identity(4, 4);
  GKSubspace sub(dense_op(a), identity_operator(4), Vector{{1.0, 0.0, 0.0, 0.0}});
  sub.sync();
  const Vector w{{0.0, 3.0, 4.0, 0.0}};
  ASSERT_EQ(sub.expand(w), ExpandOutcome::expanded);
  EXPECT_LE((Vector(sub.V().col(1)) - w / 5.0).norm(), 1e-16);
}

TEST(GKSubspace, FullBasisReportsConvergence) {
  const Matrix a = random_matrix(3, 3, 3);
  GKSubspace sub(dense_op(a), identity_operator(3), Vector{{1.0, 2.0, 3.0}}, {}, 1);
  sub.sync();
  EXPECT_EQ(sub.expand(random_vector(3, 1)), ExpandOutcome::expanded);
  EXPECT_EQ(sub.expand(random_vector(3, 2)), ExpandOutcome::expanded);
  EXPECT_TRUE(sub.full());
  EXPECT_EQ(sub.expand(random_vector(3, 3)), ExpandOutcome::converged_subspace);
  EXPECT_LE(orthonormality_error(sub.V()), 1e-14);
  const Vector y{{1.0, 2.0, -1.0}};
  EXPECT_LE((sub.reconstruct(y) - Matrix(sub.V()) * y).norm(), 0.0);
}
