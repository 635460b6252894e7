#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pwasync/pwa_model.hpp"
#include "pwasync/simulator.hpp"

namespace pwasync {

struct ModeSpectrum {
  int mode = 0;
  std::vector<std::complex<double>> eigenvalues;
  double max_real_part = 0.0;
};

struct StabilityReport {
  std::vector<ModeSpectrum> modes;
  double max_real_part = 0.0;
  bool hurwitz = false;
  /// -max_real_part - alpha1/2: non-negative when every mode meets the decay.
  double decay_margin = 0.0;
  double alpha1 = 0.0;
};

/// Spectra of A_i + B K for every mode i.
StabilityReport closed_loop_eigenvalues(const PwaSystem& sys, const Eigen::RowVectorXd& K,
                                        double alpha1 = 0.0);

struct LyapunovTrace {
  std::vector<double> values;    ///< e(t)^T S^-1 e(t) per sample
  double largest_increase = 0.0; ///< max over samples of V(t_k+1) - V(t_k), clipped at 0
};

/// Throws std::domain_error if S is not symmetric positive definite.
LyapunovTrace lyapunov_trace(const Trajectory& traj, const Eigen::MatrixXd& S);

struct SettlingMetrics {
  /// First time after which ||e|| stays below the tolerance; empty if the
  /// error is still above it at the end of the horizon.
  std::optional<double> settling_time;
  double variance = 0.0;  ///< mean of ||e||^2 over the window
  double final_error_norm = 0.0;
  double tolerance = 0.0;

  bool settled() const { return settling_time.has_value(); }
};

struct MetricsWindow {
  double start = 0.0;
  double end = std::numeric_limits<double>::infinity();
};

/// Throws std::invalid_argument for tolerance <= 0 or an empty trajectory.
SettlingMetrics settling_metrics(const Trajectory& traj, double tolerance,
                                 const MetricsWindow& window = {});

struct CompareReport {
  Eigen::RowVectorXd gain_a;
  Eigen::RowVectorXd gain_b;
  SettlingMetrics a;
  SettlingMetrics b;
  bool diverged_a = false;
  bool diverged_b = false;
  double initial_error_norm = 0.0;
  /// 'a' or 'b': which gain shows the larger error variance.
  char larger_variance = 'a';
};

/// Runs the same scenario with both gains. `relative_tolerance` is a
/// fraction of ||e(0)||.
CompareReport compare_gains(const PwaSystem& sys, const SimConfig& scenario,
                            const Eigen::RowVectorXd& gain_a, const Eigen::RowVectorXd& gain_b,
                            double relative_tolerance = 0.01, const MetricsWindow& window = {},
                            Trajectory* traj_a = nullptr, Trajectory* traj_b = nullptr);

}  // namespace pwasync
