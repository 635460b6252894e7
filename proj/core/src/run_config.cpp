#include "pwasync/run_config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pwasync {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Reads typed members of one JSON object and rejects keys it was not asked
/// about.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(join(path_, key), "expected a number");
      out = v->get<double>();
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_number()) throw ConfigError(join(path_, key), "expected a number or null");
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(join(path_, key), "expected an integer");
      out = v->get<int>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(join(path_, key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(join(path_, key), "expected an array of numbers");
      std::vector<double> values;
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) {
          throw ConfigError(join(path_, key) + "[" + std::to_string(i) + "]", "expected a number");
        }
        values.push_back((*v)[i].get<double>());
      }
      out = std::move(values);
    }
  }

  std::string child(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(join(path_, key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

void validate_config(const RunConfig& c) {
  const auto& p = c.params;
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  auto non_negative = [](double v) { return v >= 0.0 && std::isfinite(v); };
  require(positive(p.m1), "params.m1", "m1 must be positive");
  require(positive(p.m2), "params.m2", "m2 must be positive");
  require(non_negative(p.c), "params.c", "c must be non-negative");
  require(non_negative(p.c1), "params.c1", "c1 must be non-negative");
  require(positive(p.k), "params.k", "k must be positive");
  require(positive(p.k2), "params.k2", "k2 must be positive");
  require(std::isfinite(p.d2), "params.d2", "d2 must be finite");

  const auto& s = c.synthesis;
  require(positive(s.alpha1), "synthesis.alpha1", "alpha1 must be positive");
  require(positive(s.epsilon), "synthesis.epsilon", "epsilon must be positive");
  require(positive(s.delta), "synthesis.delta", "delta must be positive");
  require(!s.temperatures.empty(), "synthesis.temperatures", "must not be empty");
  for (double t : s.temperatures) {
    require(positive(t), "synthesis.temperatures", "temperatures must be positive");
  }
  require(s.max_iterations_per_temperature > 0, "synthesis.max_iterations_per_temperature",
          "must be positive");
  require(!s.restart_scales.empty(), "synthesis.restart_scales", "must not be empty");
  for (double r : s.restart_scales) {
    require(positive(r), "synthesis.restart_scales", "scales must be positive");
  }

  const auto& m = c.simulation;
  require(positive(m.dt), "simulation.dt", "dt must be positive");
  require(std::isfinite(m.horizon) && m.horizon > m.dt, "simulation.horizon",
          "horizon must exceed dt");
  require(m.x0.size() == 4, "simulation.x0", "expected 4 entries");
  require(m.y0.size() == 4, "simulation.y0", "expected 4 entries");
  for (double v : m.x0) require(std::isfinite(v), "simulation.x0", "entries must be finite");
  for (double v : m.y0) require(std::isfinite(v), "simulation.y0", "entries must be finite");
  require(std::isfinite(m.drive_amplitude), "simulation.drive_amplitude", "must be finite");
  require(std::isfinite(m.drive_frequency), "simulation.drive_frequency", "must be finite");
  require(positive(m.settling_tolerance), "simulation.settling_tolerance",
          "settling_tolerance must be positive");
  require(std::isfinite(m.variance_window_start), "simulation.variance_window_start",
          "must be finite");
  if (m.variance_window_end) {
    require(*m.variance_window_end > m.variance_window_start, "simulation.variance_window_end",
            "must exceed variance_window_start");
  }
}

json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw std::invalid_argument("expected a number");
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a matrix");
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols) {
      throw std::invalid_argument("ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = number_from(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    }
  }
  return m;
}

json row_json(const Eigen::RowVectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_json(v(i)));
  return a;
}

Eigen::RowVectorXd row_from(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array of numbers");
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from(j[i]);
  return v;
}

json stability_json(const StabilityReport& r) {
  json modes = json::array();
  for (const auto& m : r.modes) {
    json eig = json::array();
    for (const auto& l : m.eigenvalues) eig.push_back({number_json(l.real()), number_json(l.imag())});
    modes.push_back({{"mode", m.mode}, {"max_real_part", number_json(m.max_real_part)},
                     {"eigenvalues", std::move(eig)}});
  }
  return {{"modes", std::move(modes)},
          {"max_real_part", number_json(r.max_real_part)},
          {"hurwitz", r.hurwitz},
          {"decay_margin", number_json(r.decay_margin)},
          {"alpha1", number_json(r.alpha1)}};
}

StabilityReport stability_from(const json& j) {
  StabilityReport r;
  for (const auto& m : j.at("modes")) {
    ModeSpectrum s;
    s.mode = m.at("mode").get<int>();
    s.max_real_part = number_from(m.at("max_real_part"));
    for (const auto& l : m.at("eigenvalues")) {
      s.eigenvalues.emplace_back(number_from(l.at(0)), number_from(l.at(1)));
    }
    r.modes.push_back(std::move(s));
  }
  r.max_real_part = number_from(j.at("max_real_part"));
  r.hurwitz = j.at("hurwitz").get<bool>();
  r.decay_margin = number_from(j.at("decay_margin"));
  r.alpha1 = number_from(j.at("alpha1"));
  return r;
}

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

bool same_number(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same(const StabilityReport& a, const StabilityReport& b) {
  if (a.modes.size() != b.modes.size()) return false;
  for (std::size_t i = 0; i < a.modes.size(); ++i) {
    if (a.modes[i].mode != b.modes[i].mode ||
        !same_number(a.modes[i].max_real_part, b.modes[i].max_real_part) ||
        a.modes[i].eigenvalues != b.modes[i].eigenvalues) {
      return false;
    }
  }
  return same_number(a.max_real_part, b.max_real_part) && a.hurwitz == b.hurwitz &&
         same_number(a.decay_margin, b.decay_margin) && same_number(a.alpha1, b.alpha1);
}

}  // namespace

std::string to_string(Convention c) { return c == Convention::kLiteral ? "literal" : "physical"; }

Convention convention_from_string(const std::string& name) {
  if (name == "physical") return Convention::kPhysical;
  if (name == "literal") return Convention::kLiteral;
  throw std::invalid_argument("unknown convention '" + name + "' (expected physical or literal)");
}

RunConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("syntax error: ") + e.what());
  }
  RunConfig c;
  ObjectReader top(root, "");

  if (const json* p = top.find("params")) {
    ObjectReader r(*p, "params");
    r.number("m1", c.params.m1);
    r.number("m2", c.params.m2);
    r.number("c", c.params.c);
    r.number("c1", c.params.c1);
    r.number("k", c.params.k);
    r.number("k2", c.params.k2);
    r.number("d2", c.params.d2);
    r.finish();
  }

  std::string convention = to_string(c.convention);
  top.string("convention", convention);
  try {
    c.convention = convention_from_string(convention);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("convention", e.what());
  }

  if (const json* s = top.find("synthesis")) {
    ObjectReader r(*s, "synthesis");
    auto& out = c.synthesis;
    r.number("alpha1", out.alpha1);
    r.number("epsilon", out.epsilon);
    r.number("delta", out.delta);
    std::string multiplier = to_string(out.multiplier);
    r.string("multiplier", multiplier);
    try {
      out.multiplier = multiplier_from_string(multiplier);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("synthesis.multiplier", e.what());
    }
    r.boolean("retry_multipliers", out.retry_multipliers);
    r.numbers("temperatures", out.temperatures);
    r.integer("max_iterations_per_temperature", out.max_iterations_per_temperature);
    r.numbers("restart_scales", out.restart_scales);
    r.finish();
  }

  if (const json* s = top.find("simulation")) {
    ObjectReader r(*s, "simulation");
    auto& out = c.simulation;
    r.number("dt", out.dt);
    r.number("horizon", out.horizon);
    r.numbers("x0", out.x0);
    r.numbers("y0", out.y0);
    r.number("drive_amplitude", out.drive_amplitude);
    r.number("drive_frequency", out.drive_frequency);
    r.number("settling_tolerance", out.settling_tolerance);
    r.number("variance_window_start", out.variance_window_start);
    r.optional_number("variance_window_end", out.variance_window_end);
    r.finish();
  }

  if (const json* o = top.find("output")) {
    ObjectReader r(*o, "output");
    r.string("path", c.output_path);
    r.finish();
  }
  top.finish();
  validate_config(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const RunConfig& c) {
  json simulation = {{"dt", c.simulation.dt},
                     {"horizon", c.simulation.horizon},
                     {"x0", c.simulation.x0},
                     {"y0", c.simulation.y0},
                     {"drive_amplitude", c.simulation.drive_amplitude},
                     {"drive_frequency", c.simulation.drive_frequency},
                     {"settling_tolerance", c.simulation.settling_tolerance},
                     {"variance_window_start", c.simulation.variance_window_start}};
  if (c.simulation.variance_window_end) {
    simulation["variance_window_end"] = *c.simulation.variance_window_end;
  }
  json root = {
      {"params",
       {{"m1", c.params.m1},
        {"m2", c.params.m2},
        {"c", c.params.c},
        {"c1", c.params.c1},
        {"k", c.params.k},
        {"k2", c.params.k2},
        {"d2", c.params.d2}}},
      {"convention", to_string(c.convention)},
      {"synthesis",
       {{"alpha1", c.synthesis.alpha1},
        {"epsilon", c.synthesis.epsilon},
        {"delta", c.synthesis.delta},
        {"multiplier", to_string(c.synthesis.multiplier)},
        {"retry_multipliers", c.synthesis.retry_multipliers},
        {"temperatures", c.synthesis.temperatures},
        {"max_iterations_per_temperature", c.synthesis.max_iterations_per_temperature},
        {"restart_scales", c.synthesis.restart_scales}}},
      {"simulation", std::move(simulation)},
      {"output", {{"path", c.output_path}}}};
  return root.dump(2) + "\n";
}

PwaSystem make_system(const RunConfig& c) {
  return build_coupled_system(c.params, c.convention == Convention::kLiteral
                                            ? InputConvention::kUnitInput
                                            : InputConvention::kPhysical);
}

SynthesisConfig make_synthesis_config(const RunConfig& c) {
  SynthesisConfig s;
  s.alpha1 = c.synthesis.alpha1;
  s.epsilon = c.synthesis.epsilon;
  s.delta = c.synthesis.delta;
  s.multiplier = c.synthesis.multiplier;
  s.retry_multipliers = c.synthesis.retry_multipliers;
  if (c.convention == Convention::kLiteral) s.cells = literal_cells(c.params);
  s.solver.temperatures = c.synthesis.temperatures;
  s.solver.max_iterations_per_temperature = c.synthesis.max_iterations_per_temperature;
  s.solver.restart_scales = c.synthesis.restart_scales;
  return s;
}

SimConfig make_sim_config(const RunConfig& c, const Eigen::RowVectorXd& K) {
  SimConfig s;
  s.dt = c.simulation.dt;
  s.horizon = c.simulation.horizon;
  s.x0 = Eigen::Map<const Eigen::VectorXd>(c.simulation.x0.data(),
                                           static_cast<Eigen::Index>(c.simulation.x0.size()));
  s.y0 = Eigen::Map<const Eigen::VectorXd>(c.simulation.y0.data(),
                                           static_cast<Eigen::Index>(c.simulation.y0.size()));
  s.drive_amplitude = c.simulation.drive_amplitude;
  s.drive_frequency = c.simulation.drive_frequency;
  s.K = K;
  return s;
}

MetricsWindow make_metrics_window(const RunConfig& c) {
  MetricsWindow w;
  w.start = c.simulation.variance_window_start;
  if (c.simulation.variance_window_end) w.end = *c.simulation.variance_window_end;
  return w;
}

Eigen::RowVectorXd reference_lmi_gain() {
  Eigen::RowVectorXd k(4);
  k << -1.7003e3, -0.4002e3, 0.7830e3, -0.2389e3;
  return k;
}

Eigen::RowVectorXd reference_comparison_gain() {
  Eigen::RowVectorXd k(4);
  k << -35.2260, -6.5654, -12.1954, -9.8635;
  return k;
}

bool ResultBundle::operator==(const ResultBundle& o) const {
  if (status != o.status || convention != o.convention || !same_number(alpha1, o.alpha1) ||
      !same(K, o.K) || !same(S, o.S) || !same(R, o.R) || multiplier != o.multiplier ||
      !same_number(best_margin, o.best_margin) || certificate_passed != o.certificate_passed ||
      files != o.files || margins.size() != o.margins.size() ||
      stability.has_value() != o.stability.has_value()) {
    return false;
  }
  for (std::size_t i = 0; i < margins.size(); ++i) {
    if (margins[i].name != o.margins[i].name ||
        !same_number(margins[i].solver, o.margins[i].solver) ||
        !same_number(margins[i].certificate, o.margins[i].certificate)) {
      return false;
    }
  }
  return !stability || same(*stability, *o.stability);
}

std::string serialize_bundle(const ResultBundle& b) {
  json margins = json::array();
  for (const auto& m : b.margins) {
    margins.push_back({{"block", m.name},
                       {"solver", number_json(m.solver)},
                       {"certificate", number_json(m.certificate)}});
  }
  json root = {{"status", b.status},
               {"convention", to_string(b.convention)},
               {"alpha1", number_json(b.alpha1)},
               {"K", row_json(b.K)},
               {"S", matrix_json(b.S)},
               {"R", matrix_json(b.R)},
               {"multiplier", b.multiplier},
               {"best_margin", number_json(b.best_margin)},
               {"certificate_passed", b.certificate_passed},
               {"margins", std::move(margins)},
               {"files", b.files}};
  if (b.stability) root["stability"] = stability_json(*b.stability);
  return root.dump(2) + "\n";
}

ResultBundle parse_bundle(std::string_view text) {
  const json root = json::parse(text);
  ResultBundle b;
  b.status = root.at("status").get<std::string>();
  b.convention = convention_from_string(root.at("convention").get<std::string>());
  b.alpha1 = number_from(root.at("alpha1"));
  b.K = row_from(root.at("K"));
  b.S = matrix_from(root.at("S"));
  b.R = matrix_from(root.at("R"));
  b.multiplier = root.at("multiplier").get<std::string>();
  b.best_margin = number_from(root.at("best_margin"));
  b.certificate_passed = root.at("certificate_passed").get<bool>();
  for (const auto& m : root.at("margins")) {
    b.margins.push_back(BlockMargin{m.at("block").get<std::string>(), number_from(m.at("solver")),
                                    number_from(m.at("certificate"))});
  }
  b.files = root.at("files").get<std::vector<std::string>>();
  if (root.contains("stability")) b.stability = stability_from(root.at("stability"));
  return b;
}

Eigen::RowVectorXd load_gain(const std::string& spec) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(spec, ec)) {
    std::ifstream in(spec);
    std::stringstream buffer;
    buffer << in.rdbuf();
    json root;
    try {
      root = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
      throw std::invalid_argument("gain file '" + spec + "': " + e.what());
    }
    if (root.is_object() && root.contains("K")) return row_from(root.at("K"));
    if (root.is_array()) return row_from(root);
    throw std::invalid_argument("gain file '" + spec + "' has neither a K entry nor an array");
  }

  std::string text = spec;
  if (!text.empty() && text.front() == '[') {
    try {
      return row_from(json::parse(text));
    } catch (const json::exception& e) {
      throw std::invalid_argument("inline gain '" + spec + "': " + e.what());
    }
  }
  for (char& ch : text) {
    if (ch == ',' || ch == ';') ch = ' ';
  }
  std::istringstream in(text);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    double value = 0.0;
    const auto [ptr, err] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (err != std::errc() || ptr != token.data() + token.size()) {
      throw std::invalid_argument("gain '" + spec + "' is neither a file nor a number list");
    }
    values.push_back(value);
  }
  if (values.empty()) throw std::invalid_argument("empty gain specification");
  return Eigen::Map<Eigen::RowVectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buffer, ptr);
}

}  // namespace pwasync
