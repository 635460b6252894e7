#pragma once

// Test-only reference computations, kept independent of the library's
// numerical paths.

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace pwasync::testing {

/// Characteristic polynomial coefficients of A (monic, highest degree
/// first) by the Faddeev-LeVerrier recursion.
inline std::vector<double> characteristic_polynomial(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  std::vector<double> c(static_cast<std::size_t>(n + 1), 0.0);
  c[0] = 1.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    m = a * m + c[static_cast<std::size_t>(k - 1)] * Eigen::MatrixXd::Identity(n, n);
    c[static_cast<std::size_t>(k)] = -(a * m).trace() / static_cast<double>(k);
  }
  return c;
}

inline std::complex<double> evaluate_polynomial(const std::vector<double>& c,
                                                std::complex<double> z) {
  std::complex<double> acc = 0.0;
  for (double coeff : c) acc = acc * z + coeff;
  return acc;
}

/// det(A - lambda I) by complex LU.
inline std::complex<double> shifted_determinant(const Eigen::MatrixXd& a,
                                                std::complex<double> lambda) {
  Eigen::MatrixXcd m = a.cast<std::complex<double>>();
  m.diagonal().array() -= lambda;
  return m.partialPivLu().determinant();
}

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = normal(rng);
  return 0.5 * (m + m.transpose());
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = normal(rng);
  return g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

/// Solution of xdot = A x at time t through the complex eigendecomposition
/// of A (A assumed diagonalizable).
inline Eigen::VectorXd linear_flow(const Eigen::MatrixXd& a, const Eigen::VectorXd& x0, double t) {
  const Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::MatrixXcd v = es.eigenvectors();
  const Eigen::VectorXcd lambda = es.eigenvalues();
  const Eigen::VectorXcd coeffs = v.partialPivLu().solve(x0.cast<std::complex<double>>());
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(x0.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    out += coeffs(k) * std::exp(lambda(k) * t) * v.col(k);
  }
  return out.real();
}

}  // namespace pwasync::testing
