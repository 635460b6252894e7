#include "pwasync/sdp_feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pwasync/sym_eig.hpp"

namespace pwasync {

namespace {

constexpr double kSymmetryTolerance = 1e-12;

bool is_symmetric(const Eigen::MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTolerance * std::max(1.0, m.cwiseAbs().maxCoeff());
}

}  // namespace

// ---------------------------------------------------------------------------
// AffineMatrixExpr

AffineMatrixExpr::AffineMatrixExpr(int size) : constant_(Eigen::MatrixXd::Zero(size, size)) {
  if (size < 0) throw std::invalid_argument("AffineMatrixExpr: negative size");
}

Eigen::MatrixXd& AffineMatrixExpr::coefficient_for(VarId id) {
  if (id.value < 0) throw std::invalid_argument("AffineMatrixExpr: invalid variable id");
  auto it = std::lower_bound(terms_.begin(), terms_.end(), id,
                             [](const Term& t, VarId key) { return t.id < key; });
  if (it == terms_.end() || it->id != id) {
    it = terms_.insert(it, Term{id, Eigen::MatrixXd::Zero(size(), size())});
  }
  return it->coefficient;
}

void AffineMatrixExpr::place(Eigen::MatrixXd& target, int row, int col,
                             const Eigen::MatrixXd& block) {
  const auto n = target.rows();
  if (row < 0 || col < 0 || row + block.rows() > n || col + block.cols() > n) {
    throw std::invalid_argument("AffineMatrixExpr: block does not fit");
  }
  if (row == col) {
    if (block.rows() != block.cols()) {
      throw std::invalid_argument("AffineMatrixExpr: diagonal block must be square");
    }
    target.block(row, col, block.rows(), block.cols()) += block;
  } else {
    target.block(row, col, block.rows(), block.cols()) += block;
    target.block(col, row, block.cols(), block.rows()) += block.transpose();
  }
}

void AffineMatrixExpr::add_constant(const Eigen::MatrixXd& c) {
  if (c.rows() != size() || c.cols() != size()) {
    throw std::invalid_argument("AffineMatrixExpr: constant has wrong size");
  }
  constant_ += c;
}

void AffineMatrixExpr::add_term(VarId id, const Eigen::MatrixXd& coefficient) {
  if (coefficient.rows() != size() || coefficient.cols() != size()) {
    throw std::invalid_argument("AffineMatrixExpr: coefficient has wrong size");
  }
  coefficient_for(id) += coefficient;
}

void AffineMatrixExpr::add_constant_block(int row, int col, const Eigen::MatrixXd& block) {
  place(constant_, row, col, block);
}

void AffineMatrixExpr::add_term_block(VarId id, int row, int col, const Eigen::MatrixXd& block) {
  place(coefficient_for(id), row, col, block);
}

void AffineMatrixExpr::validate() const {
  if (!is_symmetric(constant_)) {
    throw std::invalid_argument("AffineMatrixExpr: constant is not symmetric");
  }
  for (const Term& t : terms_) {
    if (t.coefficient.rows() != size() || t.coefficient.cols() != size()) {
      throw std::invalid_argument("AffineMatrixExpr: coefficient has wrong size");
    }
    if (!is_symmetric(t.coefficient)) {
      throw std::invalid_argument("AffineMatrixExpr: coefficient of variable " +
                                  std::to_string(t.id.value) + " is not symmetric");
    }
  }
}

Eigen::MatrixXd eval_expr(const AffineMatrixExpr& expr, const Eigen::VectorXd& assignment) {
  Eigen::MatrixXd out = expr.constant();
  for (const auto& term : expr.terms()) {
    if (term.id.value >= assignment.size()) {
      throw std::out_of_range("eval_expr: assignment has no value for variable " +
                              std::to_string(term.id.value));
    }
    out.noalias() += assignment(term.id.value) * term.coefficient;
  }
  return 0.5 * (out + out.transpose());
}

// ---------------------------------------------------------------------------
// FeasibilityProblem

VarId FeasibilityProblem::add_variable(VariableSpec spec) {
  variables.push_back(std::move(spec));
  return VarId{static_cast<int>(variables.size()) - 1};
}

void FeasibilityProblem::add_block(std::string name, AffineMatrixExpr expr) {
  block_names.push_back(std::move(name));
  blocks.push_back(std::move(expr));
}

void FeasibilityProblem::validate() const {
  if (!(margin > 0.0)) throw std::invalid_argument("FeasibilityProblem: margin must be positive");
  if (block_names.size() != blocks.size()) {
    throw std::invalid_argument("FeasibilityProblem: block names and blocks differ in count");
  }
  for (const auto& v : variables) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
      throw std::invalid_argument("FeasibilityProblem: empty box for variable '" + v.name + "'");
    }
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    blocks[b].validate();
    for (const auto& term : blocks[b].terms()) {
      if (term.id.value >= variable_count()) {
        throw std::invalid_argument("FeasibilityProblem: block '" + block_names[b] +
                                    "' references undeclared variable " +
                                    std::to_string(term.id.value));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Solver

namespace {

struct Evaluation {
  double smoothed = 0.0;
  double worst = 0.0;
  Eigen::VectorXd gradient;
  std::vector<double> block_margins;
};

class SmoothedSpectralDescent {
 public:
  SmoothedSpectralDescent(const FeasibilityProblem& problem, const SolverOptions& options)
      : problem_(problem), options_(options) {
    const int n = problem.variable_count();
    lower_.resize(n);
    upper_.resize(n);
    for (int i = 0; i < n; ++i) {
      lower_(i) = problem.variables[static_cast<std::size_t>(i)].lower;
      upper_(i) = problem.variables[static_cast<std::size_t>(i)].upper;
    }
    eigs_.resize(problem.blocks.size());
  }

  Evaluation evaluate(const Eigen::VectorXd& v, double temperature, bool with_gradient) {
    Evaluation out;
    out.block_margins.resize(problem_.blocks.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < problem_.blocks.size(); ++b) {
      eigs_[b] = sym_eig(eval_expr(problem_.blocks[b], v));
      const auto& values = eigs_[b].values;
      out.block_margins[b] = values.size() ? values(values.size() - 1)
                                           : -std::numeric_limits<double>::infinity();
      top = std::max(top, out.block_margins[b]);
    }
    out.worst = top;

    double partition = 0.0;
    for (const auto& e : eigs_) partition += ((e.values.array() - top) / temperature).exp().sum();
    out.smoothed = top + temperature * std::log(partition);

    if (with_gradient) {
      out.gradient = Eigen::VectorXd::Zero(problem_.variable_count());
      for (std::size_t b = 0; b < problem_.blocks.size(); ++b) {
        const auto& e = eigs_[b];
        const Eigen::VectorXd weights =
            ((e.values.array() - top) / temperature).exp() / partition;
        // d lambda_k / d v_i = q_k^T C_i q_k, so the softmax-weighted sum is
        // <C_i, Q diag(w) Q^T>.
        const Eigen::MatrixXd projector =
            e.vectors * weights.asDiagonal() * e.vectors.transpose();
        for (const auto& term : problem_.blocks[b].terms()) {
          out.gradient(term.id.value) += term.coefficient.cwiseProduct(projector).sum();
        }
      }
    }
    return out;
  }

  Eigen::VectorXd project(const Eigen::VectorXd& v) const {
    return v.cwiseMax(lower_).cwiseMin(upper_);
  }

  Eigen::VectorXd start(double scale) const {
    const int n = problem_.variable_count();
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
      const auto& spec = problem_.variables[static_cast<std::size_t>(i)];
      if (spec.initial) {
        v(i) = scale * *spec.initial;
      } else if (std::isfinite(spec.lower) && std::isfinite(spec.upper)) {
        v(i) = 0.5 * (spec.lower + spec.upper);
      } else if (std::isfinite(spec.upper)) {
        v(i) = spec.upper - 1.0;
      } else if (std::isfinite(spec.lower)) {
        v(i) = spec.lower + 1.0;
      } else {
        v(i) = 0.0;
      }
    }
    return project(v);
  }

  /// Zeroes direction components that push an active bound outward.
  void mask_active(const Eigen::VectorXd& v, Eigen::VectorXd& d) const {
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if ((v(i) >= upper_(i) && d(i) > 0.0) || (v(i) <= lower_(i) && d(i) < 0.0)) d(i) = 0.0;
    }
  }

  SolveOutcome run() {
    SolveOutcome best;
    best.assignment = start(1.0);
    int iterations = 0;
    int restart = 0;
    for (double scale : options_.restart_scales) {
      Eigen::VectorXd v = start(scale);
      for (double temperature : options_.temperatures) {
        if (descend(v, temperature, iterations, best)) {
          best.restarts_used = restart;
          best.iterations = iterations;
          return best;
        }
      }
      ++restart;
    }
    best.status = FeasibilityStatus::kInfeasible;
    best.iterations = iterations;
    best.restarts_used = restart;
    return best;
  }

 private:
  void record(const Eigen::VectorXd& v, const Evaluation& e, SolveOutcome& best) const {
    if (e.worst < best.worst_margin) {
      best.worst_margin = e.worst;
      best.assignment = v;
      best.block_margins = e.block_margins;
    }
  }

  /// Returns true once a certified point is stored in `best`.
  bool accept_if_feasible(const Eigen::VectorXd& v, const Evaluation& e, SolveOutcome& best) {
    if (!(e.worst <= -problem_.margin)) return false;
    const CertificateReport cert = check_certificate(problem_, v, problem_.margin);
    if (!cert.passed) return false;
    best.status = FeasibilityStatus::kFeasible;
    best.assignment = v;
    best.worst_margin = e.worst;
    best.block_margins = e.block_margins;
    return true;
  }

  bool descend(Eigen::VectorXd& v, double temperature, int& iterations, SolveOutcome& best) {
    const int n = problem_.variable_count();
    Evaluation current = evaluate(v, temperature, true);
    record(v, current, best);
    if (accept_if_feasible(v, current, best)) return true;
    if (n == 0) return false;

    Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
    bool identity_metric = true;
    std::vector<double> history{current.smoothed};

    for (int it = 0; it < options_.max_iterations_per_temperature; ++it) {
      ++iterations;
      Eigen::VectorXd direction = -(inv_hessian * current.gradient);
      mask_active(v, direction);
      if (current.gradient.dot(direction) >= 0.0) {
        inv_hessian.setIdentity();
        identity_metric = true;
        direction = -current.gradient;
        mask_active(v, direction);
        if (current.gradient.dot(direction) >= 0.0) return false;
      }

      // Backtracking along the projection arc.
      double step = 1.0;
      Eigen::VectorXd candidate;
      Evaluation trial;
      bool accepted = false;
      while (step >= options_.min_step) {
        candidate = project(v + step * direction);
        const Eigen::VectorXd s = candidate - v;
        if (s.norm() == 0.0) break;
        trial = evaluate(candidate, temperature, false);
        if (trial.smoothed <= current.smoothed + 1e-4 * current.gradient.dot(s)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        if (identity_metric) return false;
        inv_hessian.setIdentity();
        identity_metric = true;
        continue;
      }

      trial = evaluate(candidate, temperature, true);
      const Eigen::VectorXd s = candidate - v;
      const Eigen::VectorXd y = trial.gradient - current.gradient;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        if (identity_metric) {
          inv_hessian *= sy / y.squaredNorm();
          identity_metric = false;
        }
        const double rho = 1.0 / sy;
        const Eigen::MatrixXd left =
            Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
        inv_hessian = left * inv_hessian * left.transpose() + rho * s * s.transpose();
      }

      v = candidate;
      current = std::move(trial);
      record(v, current, best);
      if (accept_if_feasible(v, current, best)) return true;

      history.push_back(current.smoothed);
      const auto window = static_cast<std::size_t>(options_.stall_window);
      if (window > 0 && history.size() > window) {
        const double before = history[history.size() - 1 - window];
        if (before - current.smoothed <=
            options_.stall_tolerance * std::max(1.0, std::abs(current.smoothed))) {
          return false;
        }
      }
    }
    return false;
  }

  const FeasibilityProblem& problem_;
  const SolverOptions& options_;
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  std::vector<SymEig> eigs_;
};

}  // namespace

SolveOutcome solve(const FeasibilityProblem& problem, const SolverOptions& options) {
  problem.validate();
  if (options.temperatures.empty() || options.restart_scales.empty()) {
    throw std::invalid_argument("solve: empty temperature or restart schedule");
  }
  for (double t : options.temperatures) {
    if (!(t > 0.0)) throw std::invalid_argument("solve: temperatures must be positive");
  }
  SmoothedSpectralDescent solver(problem, options);
  return solver.run();
}

double smoothed_max_eigenvalue(const FeasibilityProblem& problem,
                               const Eigen::VectorXd& assignment, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("smoothed_max_eigenvalue: temperature must be positive");
  }
  SolverOptions options;
  SmoothedSpectralDescent solver(problem, options);
  return solver.evaluate(assignment, temperature, false).smoothed;
}

CertificateReport check_certificate(const FeasibilityProblem& problem,
                                    const Eigen::VectorXd& assignment, double margin) {
  CertificateReport report;
  report.worst_margin = -std::numeric_limits<double>::infinity();
  if (assignment.size() < problem.variable_count()) {
    report.violations.push_back("assignment covers " + std::to_string(assignment.size()) +
                                " of " + std::to_string(problem.variable_count()) +
                                " variables");
    return report;
  }
  for (int i = 0; i < problem.variable_count(); ++i) {
    const auto& spec = problem.variables[static_cast<std::size_t>(i)];
    const double value = assignment(i);
    if (!std::isfinite(value) || value < spec.lower || value > spec.upper) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "bound violated: " << spec.name << " = " << value << " not in [" << spec.lower
          << ", " << spec.upper << "]";
      report.violations.push_back(msg.str());
    }
  }
  for (std::size_t b = 0; b < problem.blocks.size(); ++b) {
    const double top = max_eigenvalue(eval_expr(problem.blocks[b], assignment));
    report.block_margins.push_back(top);
    report.worst_margin = std::max(report.worst_margin, top);
    if (!(top <= -margin)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "block " << problem.block_names[b] << ": max eigenvalue " << top << " > " << -margin;
      report.violations.push_back(msg.str());
    }
  }
  report.passed = report.violations.empty();
  return report;
}

}  // namespace pwasync
