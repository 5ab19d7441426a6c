#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "pipestab/errors.hpp"
#include "pipestab/legendre.hpp"
#include "pipestab/lmi.hpp"
#include "pipestab/matrix_io.hpp"

using namespace pipestab;

namespace {

LmiProblem feedforward_problem(int N) {
  const PlantParams p;
  return assemble(N, build_closed_loop(p, ControllerParams::feedforward()), p);
}

LmiProblem dynamic_problem(int N) {
  const PlantParams p;
  return assemble(N, build_closed_loop(p, ControllerParams::dynamic_reference()), p);
}

DecisionVars random_vars(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd P = Eigen::MatrixXd::NullaryExpr(dim, dim, [&] { return n(rng); });
  Eigen::Matrix2d R = Eigen::Matrix2d::NullaryExpr([&] { return n(rng); });
  Eigen::Matrix2d S = Eigen::Matrix2d::NullaryExpr([&] { return n(rng); });
  return DecisionVars(P, R, S);
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Lmi, Dimensions) {
  const LmiProblem pb = dynamic_problem(1);
  EXPECT_EQ(pb.m, 4);
  EXPECT_EQ(pb.p, 4);
  EXPECT_EQ(pb.dim_xi, 10);
  EXPECT_EQ(pb.Zn.rows(), 8);
  EXPECT_EQ(pb.Zn.cols(), 10);
  EXPECT_EQ(pb.F.rows(), 8);
  EXPECT_EQ(pb.Gn.rows(), 2);
  EXPECT_EQ(pb.Hn.cols(), 10);
}

TEST(Lmi, SelectorProperty) {
  for (int N = 0; N <= 4; ++N) {
    const LmiProblem pb = dynamic_problem(N);
    Eigen::VectorXd xi = Eigen::VectorXd::LinSpaced(pb.dim_xi, 1.0, 2.0);
    EXPECT_EQ(pb.F * xi, xi.head(pb.state_dim()));
  }
}

TEST(Lmi, BoundaryRowsOnUnitBitVelocity) {
  const LmiProblem pb = feedforward_problem(2);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(pb.dim_xi);
  xi(pb.tail_offset()) = 1.0;  // w_t(1) = 1
  const Eigen::Vector2d g = pb.Gn * xi;
  const Eigen::Vector2d h = pb.Hn * xi;
  EXPECT_NEAR(g(0), 0.0, 1e-15);
  EXPECT_NEAR(g(1), 1.29743, 1e-5);
  EXPECT_NEAR(h(0), 0.70257, 1e-5);
  EXPECT_NEAR(h(1), 0.0, 1e-15);
}

TEST(Lmi, BoundaryRowsMatchRiemannCoordinates) {
  // chi1(0) = w_t(0) + c w_x(0), w_x(0) = g (w_t(0) - C1 X), and so on.
  const PlantParams p;
  const ControllerParams ctrl = ControllerParams::dynamic_reference();
  const LmiProblem pb = dynamic_problem(1);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  Eigen::VectorXd xi = Eigen::VectorXd::NullaryExpr(pb.dim_xi, [&] { return n(rng); });
  const Eigen::VectorXd X = xi.head(4);
  const double wt1 = xi(pb.tail_offset()), wt0 = xi(pb.tail_offset() + 1);
  const double u1 = ctrl.C1.dot(X);
  const double wx0 = p.g * (wt0 - u1);
  const double wx1 = -p.k * wt1;
  const Eigen::Vector2d chi0(wt0 + p.c * wx0, wt1 - p.c * wx1);
  const Eigen::Vector2d chi1(wt1 + p.c * wx1, wt0 - p.c * wx0);
  EXPECT_NEAR((pb.Gn * xi - chi0).norm(), 0.0, 1e-10);
  EXPECT_NEAR((pb.Hn * xi - chi1).norm(), 0.0, 1e-10);
}

TEST(Lmi, ProjectionRowsFollowDerivativeIdentity) {
  const LmiProblem pb = dynamic_problem(2);
  const StructuralMatrices s = build_structural(2);
  Eigen::MatrixXd expected = pb.c * s.ones * pb.Hn - pb.c * s.bar_ones * pb.Gn;
  expected.block(0, pb.m, pb.p, pb.p) -= pb.c * s.L;
  EXPECT_LT(max_abs(pb.Zn.bottomRows(pb.p) - expected), 1e-12);
  const ClosedLoop cl = build_closed_loop(PlantParams{}, ControllerParams::dynamic_reference());
  EXPECT_EQ(pb.Zn.block(0, 0, pb.m, pb.m), cl.Atil);
  EXPECT_EQ(pb.Zn.block(0, pb.tail_offset(), pb.m, 2), cl.Bhat);
  EXPECT_EQ(pb.Zn.block(0, pb.m, pb.m, pb.p), Eigen::MatrixXd::Zero(pb.m, pb.p));
}

TEST(Lmi, DecisionVarsAreSymmetrized) {
  Eigen::MatrixXd P(2, 2);
  P << 1, 2, 0, 1;
  Eigen::Matrix2d R;
  R << 1, 1e-3, 0, 1;
  const DecisionVars v(P, R, R);
  EXPECT_LT(max_abs(v.P() - v.P().transpose()), 1e-12);
  EXPECT_LT(max_abs(v.R() - v.R().transpose()), 1e-12);
  EXPECT_THROW(DecisionVars(Eigen::MatrixXd::Zero(2, 3), R, R), InputError);
}

TEST(Lmi, PsiExamples) {
  const LmiProblem pb = dynamic_problem(1);
  const DecisionVars zero = DecisionVars::zero(pb.state_dim());
  EXPECT_EQ(psi(pb, zero, 0.7), Eigen::MatrixXd::Zero(pb.dim_xi, pb.dim_xi));

  const DecisionVars eye(Eigen::MatrixXd::Identity(pb.state_dim(), pb.state_dim()),
                         Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero());
  const Eigen::MatrixXd he = pb.Zn.transpose() * pb.F + pb.F.transpose() * pb.Zn;
  EXPECT_LT(max_abs(psi(pb, eye, 0.0) - he), 1e-12);

  std::mt19937_64 rng(1);
  const DecisionVars v = random_vars(rng, pb.state_dim());
  EXPECT_LT(max_abs(psi(pb, v * 2.0, 0.3) - 2.0 * psi(pb, v, 0.3)), 1e-9);
  EXPECT_THROW(psi(pb, DecisionVars::zero(3), 0.0), InputError);
}

TEST(Lmi, PsiIsSymmetricAndAffine) {
  std::mt19937_64 rng(2);
  for (int N = 0; N <= 3; ++N) {
    const LmiProblem pb = dynamic_problem(N);
    for (int t = 0; t < 10; ++t) {
      const DecisionVars a = random_vars(rng, pb.state_dim());
      const DecisionVars b = random_vars(rng, pb.state_dim());
      const Eigen::MatrixXd pa = psi(pb, a, 0.4);
      const double scale = max_abs(pa);
      EXPECT_LT(max_abs(pa - pa.transpose()), 1e-14 * scale);
      EXPECT_LT(max_abs(psi(pb, a + b, 0.4) - pa - psi(pb, b, 0.4)), 1e-12 * scale);
    }
  }
}

TEST(Lmi, WeightedRBlock) {
  const LmiProblem pb = dynamic_problem(0);
  const DecisionVars v(Eigen::MatrixXd::Identity(pb.state_dim(), pb.state_dim()),
                       Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity());
  const Eigen::MatrixXd diff = psi(pb, v, 0.2) - lmi_matrix(pb, v, 0.2);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(8, 8);
  expected.block(4, 4, 2, 2) = pb.c * Eigen::Matrix2d::Identity();
  EXPECT_LT(max_abs(diff - expected), 1e-12);

  const LmiProblem pb3 = dynamic_problem(3);
  const Eigen::MatrixXd W = weighted_r_block(pb3, Eigen::Matrix2d::Identity());
  for (int l = 0; l <= 3; ++l) {
    EXPECT_EQ(W(pb3.m + 2 * l, pb3.m + 2 * l), 2.0 * l + 1.0);
  }
  EXPECT_EQ(W.trace(), 2.0 * (1 + 3 + 5 + 7));

  const DecisionVars noR(Eigen::MatrixXd::Identity(pb.state_dim(), pb.state_dim()),
                         Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Identity());
  EXPECT_EQ(lmi_matrix(pb, noR, 0.3), psi(pb, noR, 0.3));
}

TEST(Lmi, TailBlockIsTheNecessaryCondition) {
  const LmiProblem pb = dynamic_problem(2);
  std::mt19937_64 rng(4);
  const DecisionVars v = random_vars(rng, pb.state_dim());
  const double alpha = 0.6;
  const int t = pb.tail_offset();
  const ClosedLoop cl = build_closed_loop(PlantParams{}, ControllerParams::dynamic_reference());
  const Eigen::Matrix2d expected =
      pb.c * cl.H.transpose() * (v.S() + v.R()) * cl.H * std::exp(2 * alpha / pb.c) -
      pb.c * cl.G.transpose() * v.S() * cl.G;
  EXPECT_LT(max_abs(lmi_matrix(pb, v, alpha).block(t, t, 2, 2) - expected), 1e-10);
}

TEST(Lmi, MaxEigenvalueGrowsWithAlpha) {
  const LmiProblem pb = feedforward_problem(1);
  const DecisionVars v(Eigen::MatrixXd::Identity(pb.state_dim(), pb.state_dim()) * 0.1,
                       Eigen::Matrix2d::Identity() * 0.2, Eigen::Matrix2d::Identity() * 0.3);
  double prev = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 40; ++i) {
    const double alpha = 1.23 * i / 40.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lmi_matrix(pb, v, alpha));
    const double top = es.eigenvalues().maxCoeff();
    EXPECT_GE(top, prev - 1e-12);
    prev = top;
  }
}

TEST(Lmi, StructuralDumpRoundTrip) {
  const LmiProblem pb = dynamic_problem(2);
  std::stringstream ss;
  dump_structural(ss, pb);
  const auto m = read_matrices(ss);
  EXPECT_EQ(m.at("F"), pb.F);
  EXPECT_EQ(m.at("Z"), pb.Zn);
  EXPECT_EQ(m.at("G"), pb.Gn);
  EXPECT_EQ(m.at("H"), pb.Hn);
  EXPECT_EQ(m.at("L"), pb.L);
  EXPECT_EQ(m.at("ones"), pb.ones);
  EXPECT_EQ(m.at("bar_ones"), pb.bar_ones);
}

TEST(MatrixIo, MalformedInput) {
  std::istringstream a("matrix A 2 2\n1 2\n3\n");
  EXPECT_THROW(read_matrices(a), InputError);
  std::istringstream b("matrix A 1 1\n1\nmatrix A 1 1\n2\n");
  EXPECT_THROW(read_matrices(b), InputError);
  std::istringstream c("matrix A 1 1\nx\n");
  EXPECT_THROW(read_matrices(c), InputError);
  std::istringstream d("# comment\nmatrix A 1 2\n0.1 -3e-7\n");
  const auto m = read_matrices(d);
  EXPECT_EQ(m.at("A")(0, 1), -3e-7);
}

TEST(Lmi, NegativeOrderRejected) {
  const PlantParams p;
  EXPECT_THROW(assemble(-1, build_closed_loop(p, ControllerParams::feedforward()), p), DomainError);
}
