#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pwasync/analysis.hpp"
#include "pwasync/lmi_synthesis.hpp"
#include "pwasync/pwa_model.hpp"
#include "pwasync/simulator.hpp"

namespace pwasync {

/// Convention set applied to both the input column and the LMI cell data.
enum class Convention {
  kPhysical,  ///< B = [0 1/m1 0 0]^T, canonical cells
  kLiteral,     ///< B = [0 1 0 0]^T, literal cell offsets
};

std::string to_string(Convention c);
Convention convention_from_string(const std::string& name);

/// Thrown for malformed or out-of-domain configuration; `field()` is the
/// dotted path of the offending key ("" for syntax errors).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct SynthesisSettings {
  double alpha1 = 1e-4;
  double epsilon = 1e-6;
  double delta = 1e-6;
  MultiplierChoice multiplier = MultiplierChoice::kIdentity;
  bool retry_multipliers = true;
  std::vector<double> temperatures{1.0, 0.1, 0.01, 0.001};
  int max_iterations_per_temperature = 50000;
  std::vector<double> restart_scales{1.0, 10.0, 0.1};

  bool operator==(const SynthesisSettings&) const = default;
};

struct SimulationSettings {
  double dt = 1e-3;
  double horizon = 50.0;
  std::vector<double> x0{1.0, 0.01, 0.01, 0.01};
  std::vector<double> y0{0.05, 0.0, 0.01, 1.0};
  double drive_amplitude = 1.5;
  double drive_frequency = 1.5;
  /// Settling band as a fraction of ||e(0)||.
  double settling_tolerance = 0.01;
  double variance_window_start = 0.0;
  std::optional<double> variance_window_end;

  bool operator==(const SimulationSettings&) const = default;
};

struct RunConfig {
  MassSpringParams params;
  Convention convention = Convention::kPhysical;
  SynthesisSettings synthesis;
  SimulationSettings simulation;
  std::string output_path;  ///< empty: each subcommand picks its default

  bool operator==(const RunConfig&) const = default;
};

/// Parses a JSON object. Missing keys take the defaults above; unknown keys
/// and domain violations raise ConfigError.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);

PwaSystem make_system(const RunConfig& config);
SynthesisConfig make_synthesis_config(const RunConfig& config);
SimConfig make_sim_config(const RunConfig& config, const Eigen::RowVectorXd& K);
MetricsWindow make_metrics_window(const RunConfig& config);

/// Reference gain of the LMI design, 10^3 [-1.7003 -0.4002 0.7830 -0.2389].
Eigen::RowVectorXd reference_lmi_gain();
/// Reference gain of the comparison design.
Eigen::RowVectorXd reference_comparison_gain();

/// Everything a synthesize or verify run reports.
struct ResultBundle {
  std::string status;  ///< "feasible", "infeasible" or "given"
  Convention convention = Convention::kPhysical;
  double alpha1 = 0.0;
  Eigen::RowVectorXd K;
  Eigen::MatrixXd S;
  Eigen::MatrixXd R;
  std::string multiplier;
  double best_margin = 0.0;
  bool certificate_passed = false;
  std::vector<BlockMargin> margins;
  std::optional<StabilityReport> stability;
  std::vector<std::string> files;

  bool operator==(const ResultBundle& other) const;
};

std::string serialize_bundle(const ResultBundle& bundle);
ResultBundle parse_bundle(std::string_view text);

/// Reads a gain from a JSON file (a bundle with "K" or a bare array), or
/// parses `spec` itself as a JSON array or comma/space separated numbers.
Eigen::RowVectorXd load_gain(const std::string& spec);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

}  // namespace pwasync
