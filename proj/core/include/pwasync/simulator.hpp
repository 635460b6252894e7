#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "pwasync/pwa_model.hpp"

namespace pwasync {

struct SimConfig {
  double dt = 1e-3;
  double horizon = 50.0;
  StateVector x0 = (StateVector(4) << 1.0, 0.01, 0.01, 0.01).finished();
  StateVector y0 = (StateVector(4) << 0.05, 0.0, 0.01, 1.0).finished();
  double drive_amplitude = 1.5;  ///< N
  double drive_frequency = 1.5;  ///< rad/s
  Eigen::RowVectorXd K;          ///< slave feedback gain on e = y - x

  /// Throws std::invalid_argument naming the offending field.
  void validate(int state_dim) const;
};

/// One sample per integration step, t = 0 included.
struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> master;
  std::vector<StateVector> slave;
  std::vector<StateVector> error;  ///< slave - master, computed per sample
  std::vector<double> master_input;
  std::vector<double> slave_input;
  std::vector<int> master_mode;
  std::vector<int> slave_mode;
  bool diverged = false;

  std::size_t size() const { return times.size(); }
};

/// Master drive force A_d sin(omega t).
double drive_input(double t, double amplitude, double frequency);

/// Slave force v = u + K (y - x).
double control_input(const Eigen::RowVectorXd& K, const StateVector& x, const StateVector& y,
                     double u);

using OdeField = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Classical four-stage Runge-Kutta step.
Eigen::VectorXd rk4_step(const OdeField& field, double t, const Eigen::VectorXd& z, double dt);

/// One step of the stacked master/slave closed loop. The active modes and
/// the slave feedback are re-evaluated at every stage. Throws
/// std::runtime_error if the result is not finite.
std::pair<StateVector, StateVector> master_slave_step(const PwaSystem& sys, const SimConfig& cfg,
                                                      const StateVector& x, const StateVector& y,
                                                      double t, double dt);

/// Integrates over [0, horizon] with fixed steps. A state norm above 1e9
/// truncates the run and sets `diverged`.
Trajectory simulate(const PwaSystem& sys, const SimConfig& cfg);

}  // namespace pwasync
