#include "pwasync/simulator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pwasync {

namespace {

constexpr double kDivergenceNorm = 1e9;

}  // namespace

void SimConfig::validate(int state_dim) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!(horizon > dt) || !std::isfinite(horizon)) {
    throw std::invalid_argument("horizon must exceed dt");
  }
  if (x0.size() != state_dim || !x0.allFinite()) {
    throw std::invalid_argument("x0 must have " + std::to_string(state_dim) + " finite entries");
  }
  if (y0.size() != state_dim || !y0.allFinite()) {
    throw std::invalid_argument("y0 must have " + std::to_string(state_dim) + " finite entries");
  }
  if (K.size() != state_dim || !K.allFinite()) {
    throw std::invalid_argument("gain K must have " + std::to_string(state_dim) +
                                " finite entries");
  }
  if (!std::isfinite(drive_amplitude) || !std::isfinite(drive_frequency)) {
    throw std::invalid_argument("drive amplitude and frequency must be finite");
  }
}

double drive_input(double t, double amplitude, double frequency) {
  return amplitude * std::sin(frequency * t);
}

double control_input(const Eigen::RowVectorXd& K, const StateVector& x, const StateVector& y,
                     double u) {
  if (K.size() != x.size() || x.size() != y.size()) {
    throw std::invalid_argument("control_input: dimension mismatch");
  }
  return u + K.dot(y - x);
}

Eigen::VectorXd rk4_step(const OdeField& field, double t, const Eigen::VectorXd& z, double dt) {
  const Eigen::VectorXd k1 = field(t, z);
  const Eigen::VectorXd k2 = field(t + 0.5 * dt, z + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = field(t + 0.5 * dt, z + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = field(t + dt, z + dt * k3);
  return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::pair<StateVector, StateVector> master_slave_step(const PwaSystem& sys, const SimConfig& cfg,
                                                      const StateVector& x, const StateVector& y,
                                                      double t, double dt) {
  const Eigen::Index n = sys.state_dim();
  const OdeField field = [&](double s, const Eigen::VectorXd& z) {
    const StateVector xs = z.head(n);
    const StateVector ys = z.tail(n);
    const double u = drive_input(s, cfg.drive_amplitude, cfg.drive_frequency);
    const double v = control_input(cfg.K, xs, ys, u);
    Eigen::VectorXd dz(2 * n);
    dz << sys.vector_field(xs, u), sys.vector_field(ys, v);
    return dz;
  };
  Eigen::VectorXd z(2 * n);
  z << x, y;
  const Eigen::VectorXd next = rk4_step(field, t, z, dt);
  if (!next.allFinite()) {
    throw std::runtime_error("master_slave_step: non-finite state at t = " + std::to_string(t + dt));
  }
  return {next.head(n), next.tail(n)};
}

Trajectory simulate(const PwaSystem& sys, const SimConfig& cfg) {
  cfg.validate(sys.state_dim());
  const auto steps = static_cast<long>(std::llround(cfg.horizon / cfg.dt));

  Trajectory traj;
  traj.times.reserve(static_cast<std::size_t>(steps + 1));
  auto push = [&](double t, const StateVector& x, const StateVector& y) {
    const double u = drive_input(t, cfg.drive_amplitude, cfg.drive_frequency);
    traj.times.push_back(t);
    traj.master.push_back(x);
    traj.slave.push_back(y);
    traj.error.push_back(y - x);
    traj.master_input.push_back(u);
    traj.slave_input.push_back(control_input(cfg.K, x, y, u));
    traj.master_mode.push_back(sys.mode_of(x));
    traj.slave_mode.push_back(sys.mode_of(y));
  };

  StateVector x = cfg.x0;
  StateVector y = cfg.y0;
  push(0.0, x, y);
  for (long step = 0; step < steps; ++step) {
    const double t = static_cast<double>(step) * cfg.dt;
    std::tie(x, y) = master_slave_step(sys, cfg, x, y, t, cfg.dt);
    push(static_cast<double>(step + 1) * cfg.dt, x, y);
    if (x.norm() > kDivergenceNorm || y.norm() > kDivergenceNorm) {
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

}  // namespace pwasync
