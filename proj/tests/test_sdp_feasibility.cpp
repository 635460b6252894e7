#include "pwasync/sdp_feasibility.hpp"

#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace pwasync {
namespace {

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

AffineMatrixExpr random_expr(std::mt19937_64& rng, int size, int vars) {
  AffineMatrixExpr e(size);
  e.add_constant(testing::random_symmetric(rng, size));
  for (int v = 0; v < vars; ++v) e.add_term(VarId{v}, testing::random_symmetric(rng, size));
  return e;
}

TEST(EvalExpr, ZeroAssignmentGivesConstant) {
  std::mt19937_64 rng(1);
  const AffineMatrixExpr e = random_expr(rng, 5, 3);
  EXPECT_EQ(eval_expr(e, Eigen::VectorXd::Zero(3)), e.constant());
}

TEST(EvalExpr, SingleTerm) {
  AffineMatrixExpr e(2);
  e.add_term(VarId{0}, Eigen::MatrixXd::Identity(2, 2));
  EXPECT_EQ(eval_expr(e, Eigen::VectorXd::Constant(1, 2.0)), 2.0 * Eigen::MatrixXd::Identity(2, 2));
}

TEST(EvalExpr, AffinityOracle) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const AffineMatrixExpr e = random_expr(rng, 1 + trial % 12, 6);
    Eigen::VectorXd v1(6), v2(6);
    for (int i = 0; i < 6; ++i) {
      v1(i) = normal(rng);
      v2(i) = normal(rng);
    }
    const Eigen::MatrixXd residual =
        eval_expr(e, v1 + v2) - eval_expr(e, v1) - eval_expr(e, v2) + e.constant();
    EXPECT_LE(residual.cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::MatrixXd x = eval_expr(e, v1);
    EXPECT_EQ(x, x.transpose());
  }
}

TEST(EvalExpr, MissingVariableThrows) {
  AffineMatrixExpr e(1);
  e.add_term(VarId{3}, scalar(1.0));
  EXPECT_THROW(eval_expr(e, Eigen::VectorXd::Zero(2)), std::out_of_range);
}

TEST(AffineMatrixExpr, OffDiagonalBlocksAreMirrored) {
  AffineMatrixExpr e(3);
  e.add_constant_block(0, 1, Eigen::RowVector2d(4.0, 5.0));
  Eigen::Matrix3d expected;
  expected << 0, 4, 5, 4, 0, 0, 5, 0, 0;
  EXPECT_EQ(e.constant(), Eigen::MatrixXd(expected));
  EXPECT_THROW(e.add_constant_block(2, 2, Eigen::MatrixXd::Identity(2, 2)), std::invalid_argument);
}

TEST(AffineMatrixExpr, TermsMergeById) {
  AffineMatrixExpr e(2);
  e.add_term(VarId{1}, Eigen::MatrixXd::Identity(2, 2));
  e.add_term(VarId{0}, Eigen::MatrixXd::Identity(2, 2));
  e.add_term(VarId{1}, Eigen::MatrixXd::Identity(2, 2));
  ASSERT_EQ(e.terms().size(), 2u);
  EXPECT_EQ(e.terms()[0].id, VarId{0});
  EXPECT_EQ(e.terms()[1].coefficient, 2.0 * Eigen::MatrixXd::Identity(2, 2));
}

TEST(FeasibilityProblem, ValidateRejectsUndeclaredIds) {
  FeasibilityProblem p;
  p.add_variable({"v"});
  AffineMatrixExpr e(1);
  e.add_term(VarId{1}, scalar(1.0));
  p.add_block("b", e);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_THROW(solve(p), std::invalid_argument);
}

TEST(FeasibilityProblem, ValidateRejectsAsymmetricCoefficient) {
  FeasibilityProblem p;
  const VarId v = p.add_variable({"v"});
  AffineMatrixExpr e(2);
  Eigen::Matrix2d c;
  c << 0, 1, 0, 0;
  e.add_term(v, c);
  p.add_block("b", e);
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Solve, ScalarBlockWithUpperBound) {
  FeasibilityProblem p;
  VariableSpec spec{"v"};
  spec.upper = -p.margin;
  const VarId v = p.add_variable(spec);
  AffineMatrixExpr e(1);
  e.add_constant(scalar(-1.0));
  e.add_term(v, scalar(1.0));
  p.add_block("v-1", e);

  const SolveOutcome out = solve(p);
  ASSERT_TRUE(out.feasible());
  EXPECT_LE(out.assignment(0), -p.margin);
  EXPECT_NEAR(out.worst_margin, out.assignment(0) - 1.0, 1e-15);
  EXPECT_TRUE(check_certificate(p, out.assignment, p.margin).passed);

  // v = -1 gives margin -2.
  const CertificateReport at_minus_one = check_certificate(p, Eigen::VectorXd::Constant(1, -1.0), p.margin);
  EXPECT_TRUE(at_minus_one.passed);
  EXPECT_DOUBLE_EQ(at_minus_one.worst_margin, -2.0);
}

TEST(Solve, IntervalFeasibility) {
  FeasibilityProblem p;
  const VarId v = p.add_variable({"v"});
  AffineMatrixExpr upper(1);
  upper.add_term(v, scalar(1.0));
  AffineMatrixExpr lower(1);
  lower.add_constant(scalar(-1.0));
  lower.add_term(v, scalar(-1.0));
  p.add_block("v", upper);
  p.add_block("-1-v", lower);

  const SolveOutcome out = solve(p);
  ASSERT_TRUE(out.feasible());
  EXPECT_GT(out.assignment(0), -1.0);
  EXPECT_LT(out.assignment(0), 0.0);
}

TEST(Solve, PositiveDiagonalIsInfeasible) {
  FeasibilityProblem p;
  const VarId v = p.add_variable({"v"});
  AffineMatrixExpr e(2);
  e.add_constant(Eigen::MatrixXd::Identity(2, 2));
  e.add_term_block(v, 0, 1, scalar(1.0));
  p.add_block("[[1,v],[v,1]]", e);

  const SolveOutcome out = solve(p);
  EXPECT_FALSE(out.feasible());
  EXPECT_GE(out.worst_margin, 1.0);
  EXPECT_NEAR(out.worst_margin, 1.0, 1e-6);
}

TEST(Solve, Deterministic) {
  std::mt19937_64 rng(3);
  FeasibilityProblem p;
  for (int i = 0; i < 5; ++i) p.add_variable({"v" + std::to_string(i)});
  for (int b = 0; b < 3; ++b) p.add_block("b" + std::to_string(b), random_expr(rng, 4, 5));
  const SolveOutcome a = solve(p);
  const SolveOutcome b = solve(p);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.worst_margin, b.worst_margin);
  ASSERT_EQ(a.assignment.size(), b.assignment.size());
  for (Eigen::Index i = 0; i < a.assignment.size(); ++i) {
    EXPECT_EQ(a.assignment(i), b.assignment(i));
  }
}

TEST(Solve, FeasibleOutcomesAlwaysCertify) {
  std::mt19937_64 rng(4);
  int feasible = 0;
  for (int trial = 0; trial < 25; ++trial) {
    FeasibilityProblem p;
    for (int i = 0; i < 4; ++i) {
      VariableSpec spec{"v" + std::to_string(i)};
      if (i % 2 == 0) spec.upper = -p.margin;
      p.add_variable(spec);
    }
    for (int b = 0; b < 2; ++b) p.add_block("b" + std::to_string(b), random_expr(rng, 3, 4));
    const SolveOutcome out = solve(p);
    if (!out.feasible()) continue;
    ++feasible;
    const CertificateReport cert = check_certificate(p, out.assignment, p.margin);
    EXPECT_TRUE(cert.passed);
    EXPECT_LE(out.worst_margin, -p.margin);
    for (std::size_t b = 0; b < cert.block_margins.size(); ++b) {
      EXPECT_NEAR(cert.block_margins[b], out.block_margins[b], 1e-9);
    }
  }
  EXPECT_GT(feasible, 0);
}

TEST(Solve, SmoothingConvergesFromAbove) {
  std::mt19937_64 rng(8);
  FeasibilityProblem p;
  for (int i = 0; i < 3; ++i) p.add_variable({"v" + std::to_string(i)});
  for (int b = 0; b < 3; ++b) p.add_block("b" + std::to_string(b), random_expr(rng, 5, 3));
  const Eigen::VectorXd v = Eigen::Vector3d(0.3, -0.7, 1.1);
  const double exact = check_certificate(p, v, p.margin).worst_margin;
  const double t1 = smoothed_max_eigenvalue(p, v, 1.0);
  const double t01 = smoothed_max_eigenvalue(p, v, 0.1);
  const double t001 = smoothed_max_eigenvalue(p, v, 0.01);
  EXPECT_GE(t1, t01);
  EXPECT_GE(t01, t001);
  EXPECT_GE(t001, exact);
  EXPECT_LT(t001 - exact, t1 - exact);
  // 15 eigenvalues in total: the gap is at most T log 15.
  EXPECT_LE(t001 - exact, 0.01 * std::log(15.0) + 1e-12);
}

TEST(CheckCertificate, NamesViolatedBound) {
  FeasibilityProblem p;
  VariableSpec spec{"xi(1,1)"};
  spec.upper = -1e-6;
  const VarId v = p.add_variable(spec);
  AffineMatrixExpr e(1);
  e.add_constant(scalar(-1.0));
  e.add_term(v, scalar(0.0));
  p.add_block("b", e);
  const CertificateReport cert = check_certificate(p, Eigen::VectorXd::Constant(1, 0.5), p.margin);
  EXPECT_FALSE(cert.passed);
  ASSERT_EQ(cert.violations.size(), 1u);
  EXPECT_NE(cert.violations[0].find("xi(1,1)"), std::string::npos);
}

TEST(CheckCertificate, NamesFailingBlock) {
  FeasibilityProblem p;
  AffineMatrixExpr e(1);
  e.add_constant(scalar(2.0));
  p.add_block("positive", e);
  const CertificateReport cert = check_certificate(p, Eigen::VectorXd(), p.margin);
  EXPECT_FALSE(cert.passed);
  EXPECT_DOUBLE_EQ(cert.worst_margin, 2.0);
  ASSERT_EQ(cert.violations.size(), 1u);
  EXPECT_NE(cert.violations[0].find("positive"), std::string::npos);
}

}  // namespace
}  // namespace pwasync
