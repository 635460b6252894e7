#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pwasync {

/// Index of a scalar decision variable within a FeasibilityProblem.
struct VarId {
  int value = -1;
  auto operator<=>(const VarId&) const = default;
};

/// Symmetric matrix C0 + sum_k v_k C_k, affine in scalar decision variables.
class AffineMatrixExpr {
 public:
  struct Term {
    VarId id;
    Eigen::MatrixXd coefficient;
  };

  explicit AffineMatrixExpr(int size);

  int size() const { return static_cast<int>(constant_.rows()); }
  const Eigen::MatrixXd& constant() const { return constant_; }
  /// Sorted by variable id, at most one term per id.
  const std::vector<Term>& terms() const { return terms_; }

  void add_constant(const Eigen::MatrixXd& c);
  void add_term(VarId id, const Eigen::MatrixXd& coefficient);

  /// Places `block` at (row, col) and its transpose at (col, row). On the
  /// diagonal (row == col) the block is added once and must be symmetric.
  void add_constant_block(int row, int col, const Eigen::MatrixXd& block);
  void add_term_block(VarId id, int row, int col, const Eigen::MatrixXd& block);

  /// Throws std::invalid_argument if any stored matrix is not symmetric.
  void validate() const;

 private:
  Eigen::MatrixXd& coefficient_for(VarId id);
  static void place(Eigen::MatrixXd& target, int row, int col, const Eigen::MatrixXd& block);

  Eigen::MatrixXd constant_;
  std::vector<Term> terms_;
};

/// constant + sum value * coefficient. Throws std::out_of_range if the
/// assignment does not cover a referenced id.
Eigen::MatrixXd eval_expr(const AffineMatrixExpr& expr, const Eigen::VectorXd& assignment);

struct VariableSpec {
  std::string name;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  /// Starting value; scaled by the restart factors. Defaults to the box
  /// midpoint, bound -/+ 1 for half-open boxes, 0 when unbounded.
  std::optional<double> initial;
};

/// Find v within the boxes such that every block satisfies
/// lambda_max(block(v)) <= -margin.
struct FeasibilityProblem {
  std::vector<VariableSpec> variables;
  std::vector<AffineMatrixExpr> blocks;
  std::vector<std::string> block_names;
  double margin = 1e-6;

  VarId add_variable(VariableSpec spec);
  void add_block(std::string name, AffineMatrixExpr expr);
  int variable_count() const { return static_cast<int>(variables.size()); }

  /// Throws std::invalid_argument on undeclared ids, asymmetric blocks,
  /// empty boxes or a non-positive margin.
  void validate() const;
};

struct SolverOptions {
  std::vector<double> temperatures{1.0, 0.1, 0.01, 0.001};
  int max_iterations_per_temperature = 50000;
  double min_step = 1e-14;
  /// Leave a temperature once the smoothed objective improves by less than
  /// `stall_tolerance * max(1, |f|)` over `stall_window` iterations.
  int stall_window = 200;
  double stall_tolerance = 1e-10;
  /// Multipliers applied to the declared initial values, tried in order.
  std::vector<double> restart_scales{1.0, 10.0, 0.1};
};

enum class FeasibilityStatus { kFeasible, kInfeasible };

struct SolveOutcome {
  FeasibilityStatus status = FeasibilityStatus::kInfeasible;
  Eigen::VectorXd assignment;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<double> block_margins;
  int iterations = 0;
  int restarts_used = 0;

  bool feasible() const { return status == FeasibilityStatus::kFeasible; }
};

/// Minimizes max_b lambda_max(block_b(v)) over the boxes by projected
/// quasi-Newton descent on the log-sum-exp smoothing
///   f_T(v) = T log sum_b sum_k exp(lambda_k(block_b(v)) / T)
/// for a decreasing sequence of temperatures T. Stops as soon as the exact
/// worst margin reaches -margin. Deterministic. Throws std::invalid_argument
/// for malformed problems; an exhausted budget is reported as infeasible.
SolveOutcome solve(const FeasibilityProblem& problem, const SolverOptions& options = {});

/// f_T at `assignment`. Always >= the worst block margin, and converges to
/// it from above as T -> 0.
double smoothed_max_eigenvalue(const FeasibilityProblem& problem,
                               const Eigen::VectorXd& assignment, double temperature);

struct CertificateReport {
  bool passed = false;
  std::vector<double> block_margins;
  double worst_margin = std::numeric_limits<double>::infinity();
  /// Human-readable list of failed blocks and violated bounds.
  std::vector<std::string> violations;
};

/// Re-evaluates every block from scratch with sym_eig and checks the boxes.
CertificateReport check_certificate(const FeasibilityProblem& problem,
                                    const Eigen::VectorXd& assignment, double margin);

}  // namespace pwasync
