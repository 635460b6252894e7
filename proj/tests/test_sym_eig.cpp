#include "pwasync/sym_eig.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace pwasync {
namespace {

TEST(SymEig, IdentityHasUnitSpectrum) {
  const SymEig e = sym_eig(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(e.values, Eigen::Vector3d(1.0, 1.0, 1.0));
}

TEST(SymEig, ExchangeMatrix) {
  Eigen::Matrix2d m;
  m << 0.0, 1.0, 1.0, 0.0;
  const SymEig e = sym_eig(m);
  EXPECT_NEAR(e.values(0), -1.0, 1e-15);
  EXPECT_NEAR(e.values(1), 1.0, 1e-15);
}

TEST(SymEig, RandomReconstructionAndOrthogonality) {
  std::mt19937_64 rng(20120101);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + trial % 12;
    const Eigen::MatrixXd m = testing::random_symmetric(rng, n, 3.0);
    const SymEig e = sym_eig(m);
    const Eigen::MatrixXd& q = e.vectors;
    const double scale = std::max(1.0, m.norm());
    EXPECT_LE((q * e.values.asDiagonal() * q.transpose() - m).norm(), 1e-10 * scale);
    EXPECT_LE((q.transpose() * q - Eigen::MatrixXd::Identity(n, n)).norm(), 1e-10);
    for (Eigen::Index k = 1; k < n; ++k) EXPECT_LE(e.values(k - 1), e.values(k));
    EXPECT_NEAR(e.values.sum(), m.trace(), 1e-10 * std::max(1.0, m.cwiseAbs().sum()));
  }
}

TEST(SymEig, SymmetrizesSlightlyAsymmetricInput) {
  Eigen::Matrix2d m;
  m << 2.0, 1.0 + 1e-13, 1.0, 2.0;
  const SymEig e = sym_eig(m);
  EXPECT_NEAR(e.values(0), 1.0, 1e-12);
  EXPECT_NEAR(e.values(1), 3.0, 1e-12);
}

TEST(SymEig, RejectsNonFinite) {
  Eigen::Matrix2d m = Eigen::Matrix2d::Identity();
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(sym_eig(m), std::domain_error);
  m(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(sym_eig(m), std::domain_error);
}

TEST(SymEig, RejectsNonSquare) {
  EXPECT_THROW(sym_eig(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST(SymEig, MaxEigenvalueMatchesLastEntry) {
  Eigen::Matrix3d m;
  m << -1.0, -0.01, -0.01, -0.01, -0.5, 0.0, -0.01, 0.0, -0.5;
  // numpy.linalg.eigvalsh: [-1.00039968, -0.5, -0.49960032]
  EXPECT_NEAR(max_eigenvalue(m), -0.49960032, 1e-8);
}

}  // namespace
}  // namespace pwasync
