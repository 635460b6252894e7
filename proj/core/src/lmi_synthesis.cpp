#include "pwasync/lmi_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pwasync/sym_eig.hpp"

namespace pwasync {

namespace {

std::string pair_suffix(const PairData& p) {
  return "(" + std::to_string(p.i) + "," + std::to_string(p.j) + ")";
}

Eigen::MatrixXd unit_outer(int n, int a, int b) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
  e(a, b) = 1.0;
  e(b, a) = 1.0;
  return e;
}

void check_pair_dimensions(const PairData& p) {
  const auto n = p.A_ij.rows();
  if (p.A_ij.cols() != n || p.A_i.rows() != n || p.A_i.cols() != n || p.b_ij.size() != n) {
    throw std::invalid_argument("pair " + pair_suffix(p) + ": mode data dimensions disagree");
  }
  if (p.H_i.rows() != n || p.H_j.rows() != n) {
    throw std::invalid_argument("pair " + pair_suffix(p) + ": H rows differ from state dimension");
  }
  if (p.H_i.cols() != p.h_i.size() || p.H_j.cols() != p.h_j.size()) {
    throw std::invalid_argument("pair " + pair_suffix(p) + ": H and h dimensions disagree");
  }
}

}  // namespace

std::string to_string(MultiplierChoice choice) {
  switch (choice) {
    case MultiplierChoice::kIdentity: return "identity";
    case MultiplierChoice::kZero: return "zero";
    case MultiplierChoice::kAbsOffset: return "abs_offset";
  }
  return "identity";
}

MultiplierChoice multiplier_from_string(const std::string& name) {
  if (name == "identity") return MultiplierChoice::kIdentity;
  if (name == "zero") return MultiplierChoice::kZero;
  if (name == "abs_offset") return MultiplierChoice::kAbsOffset;
  throw std::invalid_argument("unknown multiplier '" + name +
                              "' (expected identity, zero or abs_offset)");
}

Eigen::MatrixXd multiplier_matrix(MultiplierChoice choice, const Eigen::VectorXd& h) {
  const auto r = h.size();
  switch (choice) {
    case MultiplierChoice::kZero: return Eigen::MatrixXd::Zero(r, r);
    case MultiplierChoice::kAbsOffset: return h.cwiseAbs().asDiagonal();
    case MultiplierChoice::kIdentity: break;
  }
  return Eigen::MatrixXd::Identity(r, r);
}

std::vector<PairData> pair_deltas(const PwaSystem& sys, const std::vector<PolyhedralCell>* cells) {
  const std::vector<PolyhedralCell>& use = cells ? *cells : sys.cells();
  if (sys.mode_count() < 1 || use.size() != static_cast<std::size_t>(sys.mode_count())) {
    throw std::invalid_argument("pair_deltas: need one cell per mode and at least one mode");
  }
  std::vector<PairData> out;
  out.reserve(static_cast<std::size_t>(sys.mode_count() * sys.mode_count()));
  for (int i = 1; i <= sys.mode_count(); ++i) {
    for (int j = 1; j <= sys.mode_count(); ++j) {
      const Mode& mi = sys.mode(i);
      const Mode& mj = sys.mode(j);
      const PolyhedralCell& ci = use[static_cast<std::size_t>(i - 1)];
      const PolyhedralCell& cj = use[static_cast<std::size_t>(j - 1)];
      PairData p;
      p.i = i;
      p.j = j;
      p.A_i = mi.A;
      p.A_ij = mi.A - mj.A;
      p.b_ij = mi.b - mj.b;
      p.H_i = ci.H;
      p.H_j = cj.H;
      p.h_i = ci.h;
      p.h_j = cj.h;
      p.M_i = Eigen::MatrixXd::Identity(ci.h.size(), ci.h.size());
      p.M_j = Eigen::MatrixXd::Identity(cj.h.size(), cj.h.size());
      out.push_back(std::move(p));
    }
  }
  return out;
}

SharedHandles declare_shared(FeasibilityProblem& problem, int n, int m, double delta) {
  SharedHandles h;
  h.S.assign(static_cast<std::size_t>(n), std::vector<VarId>(static_cast<std::size_t>(n)));
  AffineMatrixExpr floor(n);
  // S >= delta I is stated as (delta - margin) I - S <= -margin I.
  floor.add_constant((delta - problem.margin) * Eigen::MatrixXd::Identity(n, n));
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      VariableSpec spec;
      spec.name = "S[" + std::to_string(a) + "," + std::to_string(b) + "]";
      spec.initial = a == b ? 1.0 : 0.0;
      const VarId id = problem.add_variable(std::move(spec));
      h.S[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = id;
      h.S[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = id;
      floor.add_term(id, -unit_outer(n, a, b));
    }
  }
  h.R.assign(static_cast<std::size_t>(m), std::vector<VarId>(static_cast<std::size_t>(n)));
  for (int p = 0; p < m; ++p) {
    for (int q = 0; q < n; ++q) {
      VariableSpec spec;
      spec.name = "R[" + std::to_string(p) + "," + std::to_string(q) + "]";
      h.R[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] = problem.add_variable(spec);
    }
  }
  problem.add_block("S>=delta*I", std::move(floor));
  return h;
}

PairHandles declare_pair(FeasibilityProblem& problem, const PairData& pair, double epsilon) {
  const std::string tag = pair_suffix(pair);
  auto negative = [&](std::string name) {
    VariableSpec spec;
    spec.name = std::move(name);
    spec.upper = -epsilon;
    return problem.add_variable(std::move(spec));
  };
  PairHandles h;
  for (Eigen::Index k = 0; k < pair.h_i.size(); ++k) {
    h.E.push_back(negative("E" + tag + "[" + std::to_string(k) + "]"));
  }
  for (Eigen::Index k = 0; k < pair.h_j.size(); ++k) {
    h.F.push_back(negative("F" + tag + "[" + std::to_string(k) + "]"));
  }
  h.beta = negative("beta" + tag);
  h.xi = negative("xi" + tag);
  return h;
}

AffineMatrixExpr assemble_lmi11(const PairData& pair, const PairHandles& vars) {
  check_pair_dimensions(pair);
  const int ri = static_cast<int>(pair.h_i.size());
  const int rj = static_cast<int>(pair.h_j.size());
  if (static_cast<int>(vars.E.size()) != ri || static_cast<int>(vars.F.size()) != rj) {
    throw std::invalid_argument("assemble_lmi11: multiplier handles disagree with cell facets");
  }
  AffineMatrixExpr expr(1 + ri + rj);
  expr.add_term_block(vars.xi, 0, 0, Eigen::MatrixXd::Ones(1, 1));
  expr.add_term_block(vars.xi, 0, 1, pair.h_i.cwiseAbs().transpose());
  expr.add_term_block(vars.xi, 0, 1 + ri, pair.h_j.cwiseAbs().transpose());
  for (int k = 0; k < ri; ++k) {
    expr.add_term_block(vars.E[static_cast<std::size_t>(k)], 1 + k, 1 + k,
                        Eigen::MatrixXd::Constant(1, 1, 0.5));
  }
  for (int k = 0; k < rj; ++k) {
    expr.add_term_block(vars.F[static_cast<std::size_t>(k)], 1 + ri + k, 1 + ri + k,
                        Eigen::MatrixXd::Constant(1, 1, 0.5));
  }
  return expr;
}

AffineMatrixExpr assemble_lmi12(const PairData& pair, const Eigen::MatrixXd& B, double alpha,
                                const SharedHandles& shared, const PairHandles& vars) {
  check_pair_dimensions(pair);
  if (!(alpha > 0.0)) throw std::invalid_argument("assemble_lmi12: alpha must be positive");
  const int n = static_cast<int>(pair.A_ij.rows());
  const int ri = static_cast<int>(pair.h_i.size());
  const int rj = static_cast<int>(pair.h_j.size());
  const int m = static_cast<int>(B.cols());
  if (B.rows() != n || static_cast<int>(shared.S.size()) != n ||
      static_cast<int>(shared.R.size()) != m) {
    throw std::invalid_argument("assemble_lmi12: B or handle dimensions disagree");
  }
  if (pair.M_i.rows() != ri || pair.M_i.cols() != ri || pair.M_j.rows() != rj ||
      pair.M_j.cols() != rj) {
    throw std::invalid_argument("assemble_lmi12: multiplier M must be r x r");
  }
  if (static_cast<int>(vars.E.size()) != ri || static_cast<int>(vars.F.size()) != rj) {
    throw std::invalid_argument("assemble_lmi12: multiplier handles disagree with cell facets");
  }

  // Block offsets: error, state, E-slack, F-slack, E-cross, F-cross.
  const int o1 = 0;
  const int o2 = n;
  const int o3 = 2 * n;
  const int o4 = o3 + ri;
  const int o5 = o4 + rj;
  const int o6 = o5 + ri;
  AffineMatrixExpr expr(o6 + rj);

  const Eigen::MatrixXd HiMi = pair.H_i * pair.M_i;
  const Eigen::MatrixXd HjMj = pair.H_j * pair.M_j;
  const Eigen::VectorXd abs_hi = pair.h_i.cwiseAbs();
  const Eigen::VectorXd abs_hj = pair.h_j.cwiseAbs();
  const Eigen::VectorXd& b = pair.b_ij;

  expr.add_constant_block(o1, o2, pair.A_ij);
  expr.add_constant_block(o2, o3, pair.H_i);
  expr.add_constant_block(o2, o4, pair.H_j);
  expr.add_constant_block(o2, o5, -0.5 * HiMi);
  expr.add_constant_block(o2, o6, -0.5 * HjMj);

  for (int a = 0; a < n; ++a) {
    for (int c = a; c < n; ++c) {
      const VarId id = shared.S[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)];
      Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, n);
      basis(a, c) = 1.0;
      basis(c, a) = 1.0;
      expr.add_term_block(id, o1, o1,
                          pair.A_i * basis + basis * pair.A_i.transpose() + alpha * basis);
      expr.add_term_block(id, o1, o3, basis * pair.H_i);
      expr.add_term_block(id, o1, o5, -0.5 * basis * HiMi);
    }
  }
  for (int p = 0; p < m; ++p) {
    for (int q = 0; q < n; ++q) {
      Eigen::MatrixXd br = Eigen::MatrixXd::Zero(n, n);
      br.col(q) = B.col(p);
      expr.add_term_block(shared.R[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)], o1,
                          o1, br + br.transpose());
    }
  }

  expr.add_term_block(vars.xi, o1, o1, -b * b.transpose());
  expr.add_term_block(vars.xi, o1, o5, b * abs_hi.transpose());
  expr.add_term_block(vars.xi, o1, o6, b * abs_hj.transpose());
  expr.add_term_block(vars.xi, o5, o5, -abs_hi * abs_hi.transpose());
  expr.add_term_block(vars.xi, o5, o6, -abs_hi * abs_hj.transpose());
  expr.add_term_block(vars.xi, o6, o6, -abs_hj * abs_hj.transpose());

  expr.add_term_block(vars.beta, o2, o2, Eigen::MatrixXd::Identity(n, n));

  for (int k = 0; k < ri; ++k) {
    const VarId id = vars.E[static_cast<std::size_t>(k)];
    expr.add_term_block(id, o3 + k, o3 + k, Eigen::MatrixXd::Constant(1, 1, 2.0));
    expr.add_term_block(id, o5 + k, o5 + k, Eigen::MatrixXd::Constant(1, 1, 0.5));
  }
  for (int k = 0; k < rj; ++k) {
    const VarId id = vars.F[static_cast<std::size_t>(k)];
    expr.add_term_block(id, o4 + k, o4 + k, Eigen::MatrixXd::Constant(1, 1, 2.0));
    expr.add_term_block(id, o6 + k, o6 + k, Eigen::MatrixXd::Constant(1, 1, 0.5));
  }
  return expr;
}

Eigen::MatrixXd extract_gain(const Eigen::MatrixXd& S, const Eigen::MatrixXd& R, double delta) {
  if (S.rows() != S.cols() || R.cols() != S.rows()) {
    throw std::invalid_argument("extract_gain: S must be n x n and R m x n");
  }
  const SymEig eig = sym_eig(S);
  if (eig.values.size() == 0 || eig.values(0) < delta) {
    throw std::domain_error("extract_gain: S is not positive definite (min eigenvalue " +
                            std::to_string(eig.values.size() ? eig.values(0) : 0.0) + ")");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (S + S.transpose()));
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("extract_gain: Cholesky factorization of S failed");
  }
  // K S = R  <=>  S K^T = R^T for symmetric S.
  return llt.solve(R.transpose()).transpose();
}

void SynthesisConfig::validate() const {
  if (!(alpha1 > 0.0)) throw std::invalid_argument("alpha1 must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
}

SynthesisProblem build_synthesis_problem(const PwaSystem& sys, const SynthesisConfig& cfg,
                                         MultiplierChoice multiplier) {
  cfg.validate();
  SynthesisProblem out;
  out.problem.margin = cfg.epsilon;
  out.pairs = pair_deltas(sys, cfg.cells ? &*cfg.cells : nullptr);
  for (auto& p : out.pairs) {
    p.M_i = multiplier_matrix(multiplier, p.h_i);
    p.M_j = multiplier_matrix(multiplier, p.h_j);
  }
  const Eigen::MatrixXd B = sys.input_column();
  out.shared = declare_shared(out.problem, sys.state_dim(), static_cast<int>(B.cols()), cfg.delta);
  for (const auto& p : out.pairs) {
    out.pair_vars.push_back(declare_pair(out.problem, p, cfg.epsilon));
  }
  for (std::size_t k = 0; k < out.pairs.size(); ++k) {
    const auto& p = out.pairs[k];
    const auto& v = out.pair_vars[k];
    out.problem.add_block("lmi11" + pair_suffix(p), assemble_lmi11(p, v));
    out.problem.add_block("lmi12" + pair_suffix(p),
                          assemble_lmi12(p, B, cfg.alpha1, out.shared, v));
  }
  return out;
}

namespace {

DecisionVars read_back(const SynthesisProblem& sp, const Eigen::VectorXd& v) {
  DecisionVars d;
  const auto n = sp.shared.S.size();
  d.S.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      d.S(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v(sp.shared.S[a][b].value);
    }
  }
  const auto m = sp.shared.R.size();
  d.R.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      d.R(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = v(sp.shared.R[p][q].value);
    }
  }
  for (std::size_t k = 0; k < sp.pairs.size(); ++k) {
    const auto& h = sp.pair_vars[k];
    DecisionVars::Pair pair;
    pair.i = sp.pairs[k].i;
    pair.j = sp.pairs[k].j;
    pair.E.resize(static_cast<Eigen::Index>(h.E.size()));
    for (std::size_t e = 0; e < h.E.size(); ++e) pair.E(static_cast<Eigen::Index>(e)) = v(h.E[e].value);
    pair.F.resize(static_cast<Eigen::Index>(h.F.size()));
    for (std::size_t f = 0; f < h.F.size(); ++f) pair.F(static_cast<Eigen::Index>(f)) = v(h.F[f].value);
    pair.beta = v(h.beta.value);
    pair.xi = v(h.xi.value);
    d.pairs.push_back(std::move(pair));
  }
  return d;
}

std::vector<MultiplierChoice> multiplier_schedule(const SynthesisConfig& cfg) {
  std::vector<MultiplierChoice> order{cfg.multiplier};
  if (cfg.retry_multipliers) {
    for (auto c : {MultiplierChoice::kZero, MultiplierChoice::kIdentity,
                   MultiplierChoice::kAbsOffset}) {
      if (std::find(order.begin(), order.end(), c) == order.end()) order.push_back(c);
    }
  }
  return order;
}

}  // namespace

SynthesisResult synthesize(const PwaSystem& sys, const SynthesisConfig& cfg) {
  cfg.validate();
  SynthesisResult result;
  result.best_margin = std::numeric_limits<double>::infinity();

  for (MultiplierChoice choice : multiplier_schedule(cfg)) {
    result.multipliers_tried.push_back(choice);
    const SynthesisProblem sp = build_synthesis_problem(sys, cfg, choice);
    const SolveOutcome outcome = solve(sp.problem, cfg.solver);
    result.iterations += outcome.iterations;

    const bool improves = outcome.worst_margin < result.best_margin;
    if (!outcome.feasible() && !improves) continue;

    // Certificate from freshly assembled blocks; nothing shared with the
    // solver's evaluation path besides the assignment.
    const SynthesisProblem fresh = build_synthesis_problem(sys, cfg, choice);
    const CertificateReport cert =
        check_certificate(fresh.problem, outcome.assignment, cfg.epsilon);

    result.best_margin = std::min(result.best_margin, outcome.worst_margin);
    result.multiplier_used = choice;
    result.vars = read_back(sp, outcome.assignment);
    result.certificate_passed = cert.passed;
    result.certificate_violations = cert.violations;
    result.margins.clear();
    for (std::size_t b = 0; b < sp.problem.blocks.size(); ++b) {
      result.margins.push_back(BlockMargin{sp.problem.block_names[b],
                                           outcome.block_margins.empty()
                                               ? cert.block_margins[b]
                                               : outcome.block_margins[b],
                                           cert.block_margins[b]});
    }

    if (outcome.feasible() && cert.passed) {
      result.status = FeasibilityStatus::kFeasible;
      result.K = extract_gain(result.vars.S, result.vars.R, cfg.delta);
      return result;
    }
  }
  result.status = FeasibilityStatus::kInfeasible;
  result.K.resize(0, 0);
  return result;
}

}  // namespace pwasync
