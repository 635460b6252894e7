#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pwasync/pwa_model.hpp"
#include "pwasync/sdp_feasibility.hpp"

namespace pwasync {

/// Mode-difference data for one ordered mode pair (i, j): i is the slave's
/// active mode, j the master's.
struct PairData {
  int i = 0;
  int j = 0;
  Eigen::MatrixXd A_i;
  Eigen::MatrixXd A_ij;  ///< A_i - A_j
  Eigen::VectorXd b_ij;  ///< b_i - b_j
  Eigen::MatrixXd H_i, H_j;
  Eigen::VectorXd h_i, h_j;
  Eigen::MatrixXd M_i, M_j;  ///< constant S-procedure multipliers, r x r
};

/// Constant multiplier used in the cross blocks of the decay LMI.
enum class MultiplierChoice { kIdentity, kZero, kAbsOffset };

std::string to_string(MultiplierChoice choice);
MultiplierChoice multiplier_from_string(const std::string& name);

/// M for a cell with offset h: I, 0 or diag(|h|).
Eigen::MatrixXd multiplier_matrix(MultiplierChoice choice, const Eigen::VectorXd& h);

/// All |Q|^2 ordered pairs, (1,1), (1,2), ..., with M_i = M_j = I.
/// `cells` overrides the system's own cells when given (same count).
std::vector<PairData> pair_deltas(const PwaSystem& sys,
                                  const std::vector<PolyhedralCell>* cells = nullptr);

/// Decision variables shared by every pair.
struct SharedHandles {
  std::vector<std::vector<VarId>> S;  ///< n x n, S[a][b] == S[b][a]
  std::vector<std::vector<VarId>> R;  ///< m x n
};

/// Decision variables owned by one pair.
struct PairHandles {
  std::vector<VarId> E;  ///< diagonal of E_ij, r_i entries
  std::vector<VarId> F;  ///< diagonal of F_ij, r_j entries
  VarId beta;
  VarId xi;
};

/// Declares S (initial identity), R, and the box constraint S >= delta I as
/// a block.
SharedHandles declare_shared(FeasibilityProblem& problem, int n, int m, double delta);

/// Declares E_ij, F_ij, beta_ij, xi_ij with upper bound -epsilon.
PairHandles declare_pair(FeasibilityProblem& problem, const PairData& pair, double epsilon);

/// The (1 + r_i + r_j) multiplier block
///   [ xi      xi|h_i|^T  xi|h_j|^T ]
///   [ *       E/2        0         ]
///   [ *       *          F/2       ]
AffineMatrixExpr assemble_lmi11(const PairData& pair, const PairHandles& vars);

/// The (2n + 2r_i + 2r_j) decay block whose leading entry is
///   A_i S + S A_i^T + B R + R^T B^T + alpha S - xi b_ij b_ij^T.
/// Throws std::invalid_argument on dimension mismatches or alpha <= 0.
AffineMatrixExpr assemble_lmi12(const PairData& pair, const Eigen::MatrixXd& B, double alpha,
                                const SharedHandles& shared, const PairHandles& vars);

/// K solving K S = R through a Cholesky factorization of S. Throws
/// std::domain_error when the smallest eigenvalue of S is below `delta`.
Eigen::MatrixXd extract_gain(const Eigen::MatrixXd& S, const Eigen::MatrixXd& R,
                             double delta = 1e-6);

struct SynthesisConfig {
  double alpha1 = 1e-4;
  double epsilon = 1e-6;
  double delta = 1e-6;
  MultiplierChoice multiplier = MultiplierChoice::kIdentity;
  /// On infeasibility, retry with zero, identity and diag(|h|) multipliers.
  bool retry_multipliers = true;
  /// LMI cell data; defaults to the system's own cells.
  std::optional<std::vector<PolyhedralCell>> cells;
  SolverOptions solver;

  void validate() const;
};

struct DecisionVars {
  Eigen::MatrixXd S;
  Eigen::MatrixXd R;
  struct Pair {
    int i = 0;
    int j = 0;
    Eigen::VectorXd E;
    Eigen::VectorXd F;
    double beta = 0.0;
    double xi = 0.0;
  };
  std::vector<Pair> pairs;
};

struct BlockMargin {
  std::string name;
  double solver = 0.0;       ///< lambda_max seen by the solver
  double certificate = 0.0;  ///< lambda_max recomputed from re-assembled blocks
};

struct SynthesisResult {
  FeasibilityStatus status = FeasibilityStatus::kInfeasible;
  DecisionVars vars;
  Eigen::MatrixXd K;  ///< m x n; empty when infeasible
  std::vector<BlockMargin> margins;
  double best_margin = 0.0;
  bool certificate_passed = false;
  std::vector<std::string> certificate_violations;
  MultiplierChoice multiplier_used = MultiplierChoice::kIdentity;
  std::vector<MultiplierChoice> multipliers_tried;
  int iterations = 0;

  bool feasible() const { return status == FeasibilityStatus::kFeasible; }
};

/// The complete feasibility problem for one multiplier choice, along with the
/// handles needed to read back the solution.
struct SynthesisProblem {
  FeasibilityProblem problem;
  SharedHandles shared;
  std::vector<PairHandles> pair_vars;
  std::vector<PairData> pairs;
};

SynthesisProblem build_synthesis_problem(const PwaSystem& sys, const SynthesisConfig& cfg,
                                         MultiplierChoice multiplier);

/// Searches for a common quadratic synchronization certificate and returns
/// K = R S^-1. Infeasibility is a result, not an exception.
SynthesisResult synthesize(const PwaSystem& sys, const SynthesisConfig& cfg = {});

}  // namespace pwasync
