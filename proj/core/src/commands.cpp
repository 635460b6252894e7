#include "pwasync/commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pwasync {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string output_path(const RunConfig& config, const CommandOptions& options,
                        const char* fallback) {
  if (!options.out.empty()) return options.out;
  if (!config.output_path.empty()) return config.output_path;
  return fallback;
}

/// "dir/run.csv" + "_plot.py" -> "dir/run_plot.py"
std::string sibling(const std::string& path, const std::string& suffix) {
  const fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

json metrics_json(const SettlingMetrics& m, bool diverged) {
  json settling = m.settling_time ? json(*m.settling_time) : json(nullptr);
  return {{"settled", m.settled()},
          {"settling_time", std::move(settling)},
          {"variance", m.variance},
          {"final_error_norm", m.final_error_norm},
          {"diverged", diverged}};
}

json gain_json(const Eigen::RowVectorXd& k) {
  return std::vector<double>(k.data(), k.data() + k.size());
}

std::string describe(const StabilityReport& r) {
  std::ostringstream out;
  out.precision(6);
  for (const auto& m : r.modes) {
    out << "mode " << m.mode << ": max Re(lambda) = " << m.max_real_part << "\n";
  }
  out << (r.hurwitz ? "closed loop is Hurwitz in every mode" : "closed loop is NOT Hurwitz");
  return out.str();
}

CommandResult run_synthesize(const RunConfig& config, const CommandOptions& options) {
  const PwaSystem sys = make_system(config);
  const SynthesisResult result = synthesize(sys, make_synthesis_config(config));

  ResultBundle bundle;
  bundle.status = result.feasible() ? "feasible" : "infeasible";
  bundle.convention = config.convention;
  bundle.alpha1 = config.synthesis.alpha1;
  bundle.S = result.vars.S;
  bundle.R = result.vars.R;
  bundle.multiplier = to_string(result.multiplier_used);
  bundle.best_margin = result.best_margin;
  bundle.certificate_passed = result.certificate_passed;
  bundle.margins = result.margins;
  if (result.feasible()) {
    bundle.K = result.K.row(0);
    bundle.stability = closed_loop_eigenvalues(sys, bundle.K, config.synthesis.alpha1);
  }

  const std::string path = output_path(config, options, "gain.json");
  bundle.files = {path};
  write_file_atomic(path, serialize_bundle(bundle));

  CommandResult out;
  out.artifacts = {path};
  if (!result.feasible()) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "infeasible: best margin " << result.best_margin << " after trying "
        << result.multipliers_tried.size() << " multiplier choice(s)";
    out.exit_code = kExitInfeasible;
    out.message = msg.str();
    return out;
  }
  std::ostringstream msg;
  msg.precision(10);
  msg << "feasible (multiplier " << bundle.multiplier << ", certificate margin "
      << result.best_margin << ")\nK = " << bundle.K << "\n" << describe(*bundle.stability);
  out.exit_code = kExitSuccess;
  out.message = msg.str();
  return out;
}

CommandResult run_simulate(const RunConfig& config, const CommandOptions& options) {
  if (options.gain.empty()) throw std::invalid_argument("simulate needs --gain");
  const PwaSystem sys = make_system(config);
  const Trajectory traj = simulate(sys, make_sim_config(config, load_gain(options.gain)));

  const std::string csv = output_path(config, options, "trajectory.csv");
  const std::string script = sibling(csv, "_plot.py");
  write_file_atomic(csv, trajectory_csv(traj));
  write_file_atomic(script, plot_script({fs::path(csv).filename().string()},
                                        "master/slave synchronization"));

  CommandResult out;
  out.exit_code = traj.diverged ? kExitFailure : kExitSuccess;
  out.artifacts = {csv, script};
  std::ostringstream msg;
  msg.precision(6);
  msg << traj.size() << " samples, final |e| = " << traj.error.back().norm();
  if (traj.diverged) msg << " (diverged, trajectory truncated)";
  out.message = msg.str();
  return out;
}

CommandResult run_verify(const RunConfig& config, const CommandOptions& options) {
  if (options.gain.empty()) throw std::invalid_argument("verify needs --gain");
  const PwaSystem sys = make_system(config);
  ResultBundle bundle;
  bundle.status = "given";
  bundle.convention = config.convention;
  bundle.alpha1 = config.synthesis.alpha1;
  bundle.K = load_gain(options.gain);
  bundle.stability = closed_loop_eigenvalues(sys, bundle.K, config.synthesis.alpha1);

  CommandResult out;
  if (!options.out.empty()) {
    bundle.files = {options.out};
    write_file_atomic(options.out, serialize_bundle(bundle));
    out.artifacts = {options.out};
  }
  out.exit_code = bundle.stability->hurwitz ? kExitSuccess : kExitFailure;
  out.message = describe(*bundle.stability);
  return out;
}

CommandResult run_compare(const RunConfig& config, const CommandOptions& options) {
  const PwaSystem sys = make_system(config);
  const Eigen::RowVectorXd gain_a =
      options.gain_a.empty() ? reference_lmi_gain() : load_gain(options.gain_a);
  const Eigen::RowVectorXd gain_b =
      options.gain_b.empty() ? reference_comparison_gain() : load_gain(options.gain_b);

  Trajectory traj_a;
  Trajectory traj_b;
  const CompareReport report =
      compare_gains(sys, make_sim_config(config, gain_a), gain_a, gain_b,
                    config.simulation.settling_tolerance, make_metrics_window(config), &traj_a,
                    &traj_b);

  const std::string path = output_path(config, options, "compare.json");
  const std::string csv_a = sibling(path, "_a.csv");
  const std::string csv_b = sibling(path, "_b.csv");
  const std::string script = sibling(path, "_plot.py");
  write_file_atomic(csv_a, trajectory_csv(traj_a));
  write_file_atomic(csv_b, trajectory_csv(traj_b));
  write_file_atomic(script, plot_script({fs::path(csv_a).filename().string(),
                                         fs::path(csv_b).filename().string()},
                                        "synchronization error: gain a vs gain b"));

  json root = {{"convention", to_string(config.convention)},
               {"initial_error_norm", report.initial_error_norm},
               {"tolerance", report.a.tolerance},
               {"gain_a", gain_json(gain_a)},
               {"gain_b", gain_json(gain_b)},
               {"a", metrics_json(report.a, report.diverged_a)},
               {"b", metrics_json(report.b, report.diverged_b)},
               {"larger_variance", std::string(1, report.larger_variance)},
               {"files", {path, csv_a, csv_b, script}}};
  write_file_atomic(path, root.dump(2) + "\n");

  CommandResult out;
  out.exit_code = kExitSuccess;
  out.artifacts = {csv_a, csv_b, script, path};
  std::ostringstream msg;
  msg.precision(6);
  auto line = [&msg](char label, const SettlingMetrics& m) {
    msg << "gain " << label << ": settling time ";
    if (m.settling_time) {
      msg << *m.settling_time << " s";
    } else {
      msg << "beyond horizon";
    }
    msg << ", variance " << m.variance << ", final |e| " << m.final_error_norm << "\n";
  };
  line('a', report.a);
  line('b', report.b);
  msg << "larger variance: gain " << report.larger_variance;
  out.message = msg.str();
  return out;
}

}  // namespace

CommandResult run_subcommand(std::string_view name, const RunConfig& config,
                             const CommandOptions& options) {
  try {
    if (name == "synthesize") return run_synthesize(config, options);
    if (name == "simulate") return run_simulate(config, options);
    if (name == "verify") return run_verify(config, options);
    if (name == "compare") return run_compare(config, options);
    return CommandResult{kExitFailure, {}, "unknown subcommand '" + std::string(name) + "'"};
  } catch (const std::exception& e) {
    return CommandResult{kExitFailure, {}, std::string("error: ") + e.what()};
  }
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out;
  const std::size_t n = traj.master.empty() ? 4 : static_cast<std::size_t>(traj.master[0].size());
  out += "t";
  for (std::size_t i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
  for (std::size_t i = 1; i <= n; ++i) out += ",y" + std::to_string(i);
  out += ",e_norm,u,v,mode_m,mode_s\n";
  out.reserve(traj.size() * 16 * (2 * n + 6));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out += format_double(traj.times[k]);
    for (Eigen::Index i = 0; i < traj.master[k].size(); ++i) {
      out += ',';
      out += format_double(traj.master[k](i));
    }
    for (Eigen::Index i = 0; i < traj.slave[k].size(); ++i) {
      out += ',';
      out += format_double(traj.slave[k](i));
    }
    out += ',';
    out += format_double(traj.error[k].norm());
    out += ',';
    out += format_double(traj.master_input[k]);
    out += ',';
    out += format_double(traj.slave_input[k]);
    out += ',';
    out += std::to_string(traj.master_mode[k]);
    out += ',';
    out += std::to_string(traj.slave_mode[k]);
    out += '\n';
  }
  return out;
}

std::string plot_script(const std::vector<std::string>& csv_names, const std::string& title) {
  std::ostringstream s;
  s << "#!/usr/bin/env python3\n"
       "# Generated by pwasync. Usage: python3 <this script> [output.png]\n"
       "import csv\n"
       "import os\n"
       "import sys\n\n"
       "import matplotlib\n"
       "matplotlib.use(\"Agg\")\n"
       "import matplotlib.pyplot as plt\n\n"
       "HERE = os.path.dirname(os.path.abspath(__file__))\n"
       "FILES = [";
  for (std::size_t i = 0; i < csv_names.size(); ++i) {
    s << (i ? ", " : "") << json(csv_names[i]).dump();
  }
  s << "]\n\n"
       "def load(name):\n"
       "    with open(os.path.join(HERE, name), newline=\"\") as f:\n"
       "        rows = list(csv.DictReader(f))\n"
       "    return {k: [float(r[k]) for r in rows] for k in rows[0]}\n\n"
       "data = [load(name) for name in FILES]\n"
       "fig, axes = plt.subplots(4, 1, figsize=(9, 11), sharex=True)\n"
       "for name, d in zip(FILES, data):\n"
       "    axes[0].plot(d[\"t\"], d[\"x1\"], label=f\"x1 ({name})\")\n"
       "    axes[0].plot(d[\"t\"], d[\"y1\"], \"--\", label=f\"y1 ({name})\")\n"
       "    axes[1].plot(d[\"t\"], d[\"x3\"], label=f\"x3 ({name})\")\n"
       "    axes[1].plot(d[\"t\"], d[\"y3\"], \"--\", label=f\"y3 ({name})\")\n"
       "    axes[2].semilogy(d[\"t\"], [max(v, 1e-300) for v in d[\"e_norm\"]], label=name)\n"
       "    axes[3].plot(d[\"t\"], d[\"v\"], label=f\"v ({name})\")\n"
       "axes[0].set_ylabel(\"position m1\")\n"
       "axes[1].set_ylabel(\"position m2\")\n"
       "axes[2].set_ylabel(\"|e|\")\n"
       "axes[3].set_ylabel(\"slave force v\")\n"
       "axes[3].set_xlabel(\"t [s]\")\n"
       "for ax in axes:\n"
       "    ax.legend(fontsize=\"small\")\n"
       "fig.suptitle("
    << json(title).dump()
    << ")\n"
       "out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, "
    << json(fs::path(csv_names.empty() ? std::string("plot") : csv_names.front()).stem().string() +
            ".png")
           .dump()
    << ")\n"
       "fig.savefig(out, dpi=120)\n"
       "print(out)\n";
  return s.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

}  // namespace pwasync
