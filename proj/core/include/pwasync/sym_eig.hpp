#pragma once

#include <Eigen/Dense>

namespace pwasync {

/// Eigen-decomposition of a real symmetric matrix, M = Q diag(values) Q^T.
struct SymEig {
  Eigen::VectorXd values;   ///< ascending
  Eigen::MatrixXd vectors;  ///< orthonormal columns, paired with `values`
  int sweeps = 0;
};

struct JacobiOptions {
  /// Stop once the off-diagonal Frobenius norm falls below this fraction of
  /// the matrix norm.
  double off_diagonal_tolerance = 1e-14;
  int max_sweeps = 100;
};

/// Cyclic Jacobi rotations. The input is symmetrized as (M + M^T)/2 before
/// iterating. Throws std::domain_error on non-finite entries and
/// std::invalid_argument on non-square input.
SymEig sym_eig(const Eigen::MatrixXd& m, const JacobiOptions& options = {});

/// Largest eigenvalue only; same algorithm as sym_eig.
double max_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace pwasync
