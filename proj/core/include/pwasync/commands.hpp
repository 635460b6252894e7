#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pwasync/run_config.hpp"

namespace pwasync {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInfeasible = 2;

struct CommandOptions {
  std::string out;     ///< overrides RunConfig::output_path
  std::string gain;    ///< simulate / verify: file or inline list
  std::string gain_a;  ///< compare; defaults to the reference LMI gain
  std::string gain_b;  ///< compare; defaults to the reference comparison gain
};

struct CommandResult {
  int exit_code = kExitFailure;
  std::vector<std::string> artifacts;  ///< files written, in order
  std::string message;                 ///< summary or diagnostic
};

/// Dispatches synthesize | simulate | verify | compare. Never throws; module
/// errors become exit code 1 and infeasible synthesis exit code 2.
CommandResult run_subcommand(std::string_view name, const RunConfig& config,
                             const CommandOptions& options = {});

/// CSV with header t,x1..xn,y1..yn,e_norm,u,v,mode_m,mode_s.
std::string trajectory_csv(const Trajectory& traj);

/// Matplotlib script that reads `csv_names` relative to its own directory.
std::string plot_script(const std::vector<std::string>& csv_names, const std::string& title);

/// Writes to `path` through a temporary sibling and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace pwasync
