#include "pwasync/analysis.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pwasync/lmi_synthesis.hpp"
#include "pwasync/run_config.hpp"

namespace pwasync {
namespace {

Trajectory scalar_error_trajectory(const std::vector<double>& times,
                                   const std::function<double(double)>& e) {
  Trajectory traj;
  for (double t : times) {
    traj.times.push_back(t);
    traj.error.push_back(Eigen::VectorXd::Constant(1, e(t)));
  }
  return traj;
}

std::vector<double> grid(double dt, double horizon) {
  std::vector<double> t;
  const long steps = std::lround(horizon / dt);
  for (long k = 0; k <= steps; ++k) t.push_back(static_cast<double>(k) * dt);
  return t;
}

/// Checks every reported eigenvalue against the characteristic polynomial
/// and a direct determinant.
void expect_true_eigenvalues(const Eigen::MatrixXd& a, const ModeSpectrum& spectrum) {
  const std::vector<double> poly = testing::characteristic_polynomial(a);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  ASSERT_EQ(spectrum.eigenvalues.size(), static_cast<std::size_t>(a.rows()));
  for (const auto& lambda : spectrum.eigenvalues) {
    const double mag = std::max(scale, std::abs(lambda));
    EXPECT_LE(std::abs(testing::shifted_determinant(a, lambda)), 1e-8 * std::pow(mag, 4))
        << lambda;
    EXPECT_LE(std::abs(testing::evaluate_polynomial(poly, lambda)), 1e-8 * std::pow(mag, 4))
        << lambda;
  }
}

TEST(ClosedLoopEigenvalues, ZeroGainGivesOpenLoopSpectrum) {
  const PwaSystem sys = build_coupled_system({});
  const StabilityReport report = closed_loop_eigenvalues(sys, Eigen::RowVectorXd::Zero(4));
  ASSERT_EQ(report.modes.size(), 2u);
  for (const auto& spectrum : report.modes) {
    expect_true_eigenvalues(sys.mode(spectrum.mode).A, spectrum);
  }
  // Free motion carries a rigid-body zero eigenvalue.
  EXPECT_NEAR(report.modes[0].max_real_part, 0.0, 1e-12);
  EXPECT_FALSE(report.hurwitz);
}

TEST(ClosedLoopEigenvalues, UndampedOscillator) {
  MassSpringParams params;
  params.c = 0.0;
  params.c1 = 0.0;
  const PwaSystem sys = build_coupled_system(params);
  const StabilityReport report = closed_loop_eigenvalues(sys, Eigen::RowVectorXd::Zero(4));
  const double omega = std::sqrt(params.k / params.m1 + params.k / params.m2);
  EXPECT_NEAR(omega, 3.1780497164141406, 1e-15);
  const auto& eig = report.modes[0].eigenvalues;
  int oscillatory = 0;
  int zero = 0;
  for (const auto& lambda : eig) {
    EXPECT_NEAR(lambda.real(), 0.0, 1e-6);
    if (std::abs(std::abs(lambda.imag()) - omega) < 1e-9) ++oscillatory;
    if (std::abs(lambda) < 1e-6) ++zero;
  }
  EXPECT_EQ(oscillatory, 2);
  EXPECT_EQ(zero, 2);
}

TEST(ClosedLoopEigenvalues, ReferenceGainsAreStable) {
  for (auto input : {InputConvention::kPhysical, InputConvention::kUnitInput}) {
    const PwaSystem sys = build_coupled_system({}, input);
    for (const Eigen::RowVectorXd& K : {reference_lmi_gain(), reference_comparison_gain()}) {
      const StabilityReport report = closed_loop_eigenvalues(sys, K, 1e-4);
      EXPECT_TRUE(report.hurwitz);
      EXPECT_LT(report.max_real_part, 0.0);
      EXPECT_DOUBLE_EQ(report.decay_margin, -report.max_real_part - 0.5e-4);
      for (const auto& spectrum : report.modes) {
        const Eigen::MatrixXd closed = sys.mode(spectrum.mode).A + sys.input_column() * K;
        expect_true_eigenvalues(closed, spectrum);
      }
    }
  }
}

TEST(ClosedLoopEigenvalues, DestabilizingGain) {
  const PwaSystem sys = build_coupled_system({});
  const StabilityReport report =
      closed_loop_eigenvalues(sys, Eigen::RowVector4d(1e3, 0.0, 0.0, 0.0));
  EXPECT_FALSE(report.hurwitz);
  EXPECT_GT(report.max_real_part, 0.0);
  EXPECT_THROW(closed_loop_eigenvalues(sys, Eigen::RowVector2d(1.0, 2.0)),
               std::invalid_argument);
}

TEST(LyapunovTrace, ReferenceValues) {
  const Trajectory zero = scalar_error_trajectory(grid(0.1, 1.0), [](double) { return 0.0; });
  for (double v : lyapunov_trace(zero, Eigen::MatrixXd::Identity(1, 1)).values) {
    EXPECT_EQ(v, 0.0);
  }

  Trajectory ones;
  ones.times = {0.0};
  ones.error = {Eigen::Vector4d::Ones()};
  EXPECT_EQ(lyapunov_trace(ones, Eigen::MatrixXd::Identity(4, 4)).values[0], 4.0);
  EXPECT_DOUBLE_EQ(lyapunov_trace(ones, 2.0 * Eigen::MatrixXd::Identity(4, 4)).values[0], 2.0);
}

TEST(LyapunovTrace, RejectsNonPositiveDefinite) {
  Trajectory ones;
  ones.times = {0.0};
  ones.error = {Eigen::Vector2d::Ones()};
  Eigen::Matrix2d indefinite;
  indefinite << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(lyapunov_trace(ones, indefinite), std::domain_error);
  Eigen::Matrix2d asymmetric;
  asymmetric << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(lyapunov_trace(ones, asymmetric), std::domain_error);
}

TEST(LyapunovTrace, DecreasesAlongSynthesizedRun) {
  const PwaSystem sys = build_coupled_system({});
  const SynthesisResult synth = synthesize(sys);
  ASSERT_TRUE(synth.feasible());
  SimConfig cfg;
  cfg.horizon = 30.0;
  cfg.K = synth.K.row(0);
  const Trajectory traj = simulate(sys, cfg);
  const LyapunovTrace trace = lyapunov_trace(traj, synth.vars.S);
  ASSERT_EQ(trace.values.size(), traj.size());
  // Ratio frozen from an independent RK4 run with the same K and S.
  const double ratio = trace.values.back() / trace.values.front();
  EXPECT_LT(ratio, 5e-7);
  EXPECT_NEAR(ratio, 2.4205894648723895e-07, 1e-4 * 2.42e-07);
  // Independent evaluation of V at both ends.
  const Eigen::MatrixXd P = synth.vars.S.inverse();
  for (std::size_t k : {std::size_t{0}, traj.size() - 1}) {
    const double v = traj.error[k].dot(P * traj.error[k]);
    EXPECT_NEAR(trace.values[k], v, 1e-9 * std::max(1.0, v));
  }
}

TEST(SettlingMetrics, ZeroError) {
  const Trajectory traj = scalar_error_trajectory(grid(0.01, 1.0), [](double) { return 0.0; });
  const SettlingMetrics m = settling_metrics(traj, 1e-3);
  ASSERT_TRUE(m.settled());
  EXPECT_EQ(*m.settling_time, 0.0);
  EXPECT_EQ(m.variance, 0.0);
  EXPECT_EQ(m.final_error_norm, 0.0);
}

TEST(SettlingMetrics, ExponentialDecay) {
  const double dt = 1e-3;
  const Trajectory traj =
      scalar_error_trajectory(grid(dt, 10.0), [](double t) { return std::exp(-t); });
  const double tolerance = std::exp(-5.0);
  const SettlingMetrics m = settling_metrics(traj, tolerance);
  ASSERT_TRUE(m.settled());
  EXPECT_NEAR(*m.settling_time, 5.0, dt * (1.0 + 1e-9));
  EXPECT_NEAR(m.final_error_norm, std::exp(-10.0), 1e-15);
  // Mean of exp(-2t) on the grid, against its integral over the horizon.
  EXPECT_NEAR(m.variance, (1.0 - std::exp(-20.0)) / 20.0, 1e-3);
}

TEST(SettlingMetrics, MonotoneInTolerance) {
  const Trajectory traj = scalar_error_trajectory(
      grid(1e-2, 30.0), [](double t) { return std::exp(-0.3 * t) * std::abs(std::cos(2.0 * t)); });
  double previous = std::numeric_limits<double>::infinity();
  for (double tol : {1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3}) {
    const SettlingMetrics m = settling_metrics(traj, tol);
    ASSERT_TRUE(m.settled()) << tol;
    EXPECT_LE(*m.settling_time, previous);
    previous = *m.settling_time;
  }
}

TEST(SettlingMetrics, NeverSettlesAndWindows) {
  const Trajectory traj = scalar_error_trajectory(grid(0.1, 10.0), [](double) { return 1.0; });
  EXPECT_FALSE(settling_metrics(traj, 0.5).settled());
  const Trajectory step =
      scalar_error_trajectory(grid(0.5, 10.0), [](double t) { return t < 5.0 ? 2.0 : 0.0; });
  EXPECT_DOUBLE_EQ(settling_metrics(step, 0.1, {0.0, 4.9}).variance, 4.0);
  EXPECT_EQ(settling_metrics(step, 0.1, {5.0, 10.0}).variance, 0.0);
  EXPECT_THROW(settling_metrics(traj, 0.0), std::invalid_argument);
  EXPECT_THROW(settling_metrics(Trajectory{}, 1.0), std::invalid_argument);
}

TEST(CompareGains, ReferenceGainsBothSettle) {
  const PwaSystem sys = build_coupled_system({}, InputConvention::kUnitInput);
  SimConfig scenario;
  scenario.horizon = 20.0;
  Trajectory a, b;
  const CompareReport report = compare_gains(sys, scenario, reference_lmi_gain(),
                                             reference_comparison_gain(), 0.01, {}, &a, &b);
  EXPECT_NEAR(report.initial_error_norm, 1.3721151555172038, 1e-15);
  EXPECT_TRUE(report.a.settled());
  EXPECT_TRUE(report.b.settled());
  EXPECT_FALSE(report.diverged_a);
  EXPECT_FALSE(report.diverged_b);
  EXPECT_EQ(a.size(), 20001u);
  EXPECT_EQ(report.larger_variance, report.a.variance >= report.b.variance ? 'a' : 'b');
}

TEST(CompareGains, IdenticalGainsTie) {
  const PwaSystem sys = build_coupled_system({});
  SimConfig scenario;
  scenario.horizon = 2.0;
  const CompareReport report = compare_gains(sys, scenario, reference_comparison_gain(),
                                             reference_comparison_gain());
  EXPECT_EQ(report.a.variance, report.b.variance);
  EXPECT_EQ(report.a.final_error_norm, report.b.final_error_norm);
  EXPECT_THROW(compare_gains(sys, scenario, reference_lmi_gain(), reference_lmi_gain(), 0.0),
               std::invalid_argument);
}

}  // namespace
}  // namespace pwasync
