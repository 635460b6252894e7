#include "pwasync/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pwasync/sym_eig.hpp"

namespace pwasync {

StabilityReport closed_loop_eigenvalues(const PwaSystem& sys, const Eigen::RowVectorXd& K,
                                        double alpha1) {
  if (K.size() != sys.state_dim()) {
    throw std::invalid_argument("closed_loop_eigenvalues: K must have " +
                                std::to_string(sys.state_dim()) + " entries");
  }
  StabilityReport report;
  report.alpha1 = alpha1;
  report.max_real_part = -std::numeric_limits<double>::infinity();
  for (const Mode& mode : sys.modes()) {
    const Eigen::MatrixXd closed = mode.A + sys.input_column() * K;
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(closed, false);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("closed_loop_eigenvalues: eigenvalue iteration did not converge");
    }
    ModeSpectrum spectrum;
    spectrum.mode = mode.index;
    spectrum.max_real_part = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
      const std::complex<double> lambda = solver.eigenvalues()(k);
      spectrum.eigenvalues.push_back(lambda);
      spectrum.max_real_part = std::max(spectrum.max_real_part, lambda.real());
    }
    std::sort(spectrum.eigenvalues.begin(), spectrum.eigenvalues.end(),
              [](const auto& l, const auto& r) {
                return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
              });
    report.max_real_part = std::max(report.max_real_part, spectrum.max_real_part);
    report.modes.push_back(std::move(spectrum));
  }
  report.hurwitz = report.max_real_part < 0.0;
  report.decay_margin = -report.max_real_part - 0.5 * alpha1;
  return report;
}

LyapunovTrace lyapunov_trace(const Trajectory& traj, const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols() || (S - S.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, S.norm())) {
    throw std::domain_error("lyapunov_trace: S must be square and symmetric");
  }
  const SymEig eig = sym_eig(S);
  if (eig.values.size() == 0 || !(eig.values(0) > 0.0)) {
    throw std::domain_error("lyapunov_trace: S is not positive definite");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  LyapunovTrace out;
  out.values.reserve(traj.error.size());
  for (const auto& e : traj.error) {
    if (e.size() != S.rows()) throw std::invalid_argument("lyapunov_trace: dimension mismatch");
    out.values.push_back(e.dot(llt.solve(e)));
  }
  for (std::size_t k = 1; k < out.values.size(); ++k) {
    out.largest_increase = std::max(out.largest_increase, out.values[k] - out.values[k - 1]);
  }
  return out;
}

SettlingMetrics settling_metrics(const Trajectory& traj, double tolerance,
                                 const MetricsWindow& window) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("settling_metrics: tolerance must be positive");
  if (traj.error.empty() || traj.error.size() != traj.times.size()) {
    throw std::invalid_argument("settling_metrics: empty or inconsistent trajectory");
  }
  SettlingMetrics m;
  m.tolerance = tolerance;

  std::optional<std::size_t> last_above;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < traj.error.size(); ++k) {
    const double norm = traj.error[k].norm();
    if (norm >= tolerance) last_above = k;
    if (traj.times[k] >= window.start && traj.times[k] <= window.end) {
      sum_sq += norm * norm;
      ++count;
    }
  }
  m.final_error_norm = traj.error.back().norm();
  m.variance = count ? sum_sq / static_cast<double>(count) : 0.0;
  if (!last_above) {
    m.settling_time = traj.times.front();
  } else if (*last_above + 1 < traj.times.size()) {
    m.settling_time = traj.times[*last_above + 1];
  }
  return m;
}

CompareReport compare_gains(const PwaSystem& sys, const SimConfig& scenario,
                            const Eigen::RowVectorXd& gain_a, const Eigen::RowVectorXd& gain_b,
                            double relative_tolerance, const MetricsWindow& window,
                            Trajectory* traj_a, Trajectory* traj_b) {
  if (!(relative_tolerance > 0.0)) {
    throw std::invalid_argument("compare_gains: relative tolerance must be positive");
  }
  CompareReport report;
  report.gain_a = gain_a;
  report.gain_b = gain_b;
  report.initial_error_norm = (scenario.y0 - scenario.x0).norm();
  const double tolerance =
      relative_tolerance * (report.initial_error_norm > 0.0 ? report.initial_error_norm : 1.0);

  SimConfig cfg = scenario;
  cfg.K = gain_a;
  Trajectory a = simulate(sys, cfg);
  cfg.K = gain_b;
  Trajectory b = simulate(sys, cfg);

  report.a = settling_metrics(a, tolerance, window);
  report.b = settling_metrics(b, tolerance, window);
  report.diverged_a = a.diverged;
  report.diverged_b = b.diverged;
  report.larger_variance = report.a.variance >= report.b.variance ? 'a' : 'b';
  if (traj_a) *traj_a = std::move(a);
  if (traj_b) *traj_b = std::move(b);
  return report;
}

}  // namespace pwasync
