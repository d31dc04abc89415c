#include "cascadegp/config.hpp"

#include "cascadegp/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

namespace cascadegp::cfg {
namespace {

// Calls f(section, key, field) for every configurable field, in file order.
template <class C, class F>
void visit(C& c, F&& f) {
  auto& d = c.dataset;
  f("dataset", "source", d.source);
  f("dataset", "path", d.path);
  f("dataset", "test_path", d.test_path);
  f("dataset", "chain", d.chain);
  f("dataset", "dof", d.dof);
  f("dataset", "duration", d.duration);
  f("dataset", "rate", d.rate);
  f("dataset", "seed", d.seed);
  f("dataset", "sines", d.sines);
  f("dataset", "amplitude_min", d.amplitude_min);
  f("dataset", "amplitude_max", d.amplitude_max);
  f("dataset", "frequency_min", d.frequency_min);
  f("dataset", "frequency_max", d.frequency_max);
  f("dataset", "noise_fraction", d.noise_fraction);
  f("dataset", "friction", d.friction);
  f("dataset", "payload_mass", d.payload_mass);
  f("dataset", "payload_com", d.payload_com);
  f("dataset", "subsample_hz", d.subsample_hz);
  f("dataset", "n_subsets", d.n_subsets);
  f("dataset", "test_fraction", d.test_fraction);

  auto& v = c.variant;
  f("variant", "names", v.names);
  f("variant", "history", v.history);
  f("variant", "df_mean", v.df_mean);

  auto& g = c.gp;
  f("gp", "restarts", g.restarts);
  f("gp", "max_iterations", g.max_iterations);
  f("gp", "grad_tol", g.grad_tol);
  f("gp", "objective_change_tol", g.objective_change_tol);
  f("gp", "log_bound", g.log_bound);
  f("gp", "ard", g.ard);
  f("gp", "max_points", g.max_points);
  f("gp", "seed", g.seed);
  f("gp", "chain_predictions", g.chain_predictions);

  auto& e = c.experiment;
  f("experiment", "durations", e.durations);
  f("experiment", "grid_points", e.grid_points);
  f("experiment", "grid_first", e.grid_first);
  f("experiment", "summary_marks", e.summary_marks);
  f("experiment", "n_points", e.n_points);
  f("experiment", "iter_restarts", e.iter_restarts);
  f("experiment", "joints", e.joints);
  f("experiment", "output_dir", e.output_dir);

  auto& s = c.sim;
  f("sim", "dt", s.dt);
  f("sim", "control_period", s.control_period);
  f("sim", "duration", s.duration);
  f("sim", "trajectory", s.trajectory);
  f("sim", "seed", s.seed);
  f("sim", "sines", s.sines);
  f("sim", "amplitude_min", s.amplitude_min);
  f("sim", "amplitude_max", s.amplitude_max);
  f("sim", "frequency_min", s.frequency_min);
  f("sim", "frequency_max", s.frequency_max);
  f("sim", "trajectory_duration", s.trajectory_duration);
  f("sim", "home", s.home);
  f("sim", "pick", s.pick);
  f("sim", "tilt_joint", s.tilt_joint);
  f("sim", "tilt_angle", s.tilt_angle);
  f("sim", "move_time", s.move_time);
  f("sim", "hold_time", s.hold_time);
  f("sim", "kp", s.kp);
  f("sim", "kd", s.kd);
  f("sim", "bandwidth_hz", s.bandwidth_hz);
  f("sim", "damping", s.damping);
  f("sim", "feedforward", s.feedforward);
  f("sim", "model", s.model);
  f("sim", "payload_mass", s.payload_mass);
  f("sim", "payload_com", s.payload_com);
}

Error config_error(const std::string& where, const std::string& what) {
  return Error(ErrorKind::kConfig, where + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char ch : text) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item += ch;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

template <class T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw config_error(where, "cannot parse '" + text + "' as a number");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw config_error(where, "value must be finite");
  }
  return value;
}

void read_value(const std::string& text, const std::string&, std::string& out) { out = text; }
void read_value(const std::string& text, const std::string& where, int& out) { out = parse_number<int>(text, where); }
void read_value(const std::string& text, const std::string& where, double& out) { out = parse_number<double>(text, where); }
void read_value(const std::string& text, const std::string& where, std::uint64_t& out) {
  out = parse_number<std::uint64_t>(text, where);
}
void read_value(const std::string& text, const std::string& where, bool& out) {
  if (text == "true" || text == "yes" || text == "on" || text == "1") {
    out = true;
  } else if (text == "false" || text == "no" || text == "off" || text == "0") {
    out = false;
  } else {
    throw config_error(where, "expected true or false, got '" + text + "'");
  }
}
template <class T>
void read_value(const std::string& text, const std::string& where, std::vector<T>& out) {
  out.clear();
  for (const auto& item : split_list(text)) {
    T value{};
    read_value(item, where, value);
    out.push_back(value);
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string write_value(const std::string& v) { return v; }
std::string write_value(int v) { return std::to_string(v); }
std::string write_value(std::uint64_t v) { return std::to_string(v); }
std::string write_value(double v) { return format_double(v); }
std::string write_value(bool v) { return v ? "true" : "false"; }
template <class T>
std::string write_value(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + write_value(v[i]);
  return out;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  return hash;
}

void validate(const Config& c, const std::string& source) {
  auto require = [&](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw config_error(source, key + " " + what);
  };
  const auto& d = c.dataset;
  require(d.source == "synthetic" || d.source == "sarcos" || d.source == "file", "dataset.source",
          "must be synthetic, sarcos or file");
  require(d.source == "synthetic" || !d.path.empty(), "dataset.path", "is required for sarcos and file sources");
  require(d.dof >= 1 && d.dof <= 7, "dataset.dof", "must be in 1..7");
  require(d.payload_com.size() == 3, "dataset.payload_com", "needs 3 values");
  require(d.subsample_hz >= 0.0, "dataset.subsample_hz", "must be >= 0");
  require(d.n_subsets >= 1, "dataset.n_subsets", "must be >= 1");
  require(d.test_fraction >= 0.0 && d.test_fraction < 1.0, "dataset.test_fraction", "must be in [0, 1)");
  require(d.test_fraction > 0.0 || !d.test_path.empty(), "dataset.test_path", "is required when test_fraction = 0");

  require(!c.variant.names.empty(), "variant.names", "must list at least one variant");
  require(c.variant.history >= 1, "variant.history", "must be >= 1");
  require(c.variant.df_mean == "finite_difference" || c.variant.df_mean == "dataset", "variant.df_mean",
          "must be finite_difference or dataset");
  for (const auto& name : c.variant.names) {
    try {
      learn::variant_from_name(name);
    } catch (const Error& e) {
      throw config_error(source, "variant.names: " + std::string(e.what()));
    }
  }

  require(c.gp.restarts >= 1, "gp.restarts", "must be >= 1");
  require(c.gp.max_iterations >= 1, "gp.max_iterations", "must be >= 1");
  require(c.gp.grad_tol > 0.0, "gp.grad_tol", "must be > 0");
  require(c.gp.objective_change_tol >= 0.0, "gp.objective_change_tol", "must be >= 0");
  require(c.gp.log_bound > 0.0, "gp.log_bound", "must be > 0");
  require(c.gp.max_points >= 2, "gp.max_points", "must be >= 2");

  require(c.experiment.grid_points >= 1, "experiment.grid_points", "must be >= 1");
  require(c.experiment.grid_first > 0.0, "experiment.grid_first", "must be > 0");
  require(c.experiment.n_points >= 1, "experiment.n_points", "must be >= 1");
  require(c.experiment.iter_restarts >= 1, "experiment.iter_restarts", "must be >= 1");

  const auto& s = c.sim;
  require(s.dt > 0.0, "sim.dt", "must be > 0");
  require(s.control_period >= s.dt, "sim.control_period", "must be >= sim.dt");
  require(s.trajectory == "sine" || s.trajectory == "pick_tilt_return", "sim.trajectory",
          "must be sine or pick_tilt_return");
  require(s.feedforward == "none" || s.feedforward == "rbd" || s.feedforward == "model", "sim.feedforward",
          "must be none, rbd or model");
  require(s.feedforward != "model" || !s.model.empty(), "sim.model", "is required when feedforward = model");
  require(s.payload_com.size() == 3, "sim.payload_com", "needs 3 values");
  require(s.payload_mass >= 0.0, "sim.payload_mass", "must be >= 0");
  require(s.kp.size() == s.kd.size(), "sim.kd", "must have as many entries as sim.kp");
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::kParse, source + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  Config c;
  std::map<std::string, std::set<std::string>> known;
  visit(c, [&](const char* section, const char* key, auto&) { known[section].insert(key); });
  for (const auto& [section, keys] : tree) {
    if (!keys.data().empty() || !known.count(section)) {
      throw config_error(source, "unknown section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      if (!known[section].count(key)) throw config_error(source, "unknown key '" + key + "' in [" + section + "]");
    }
  }
  visit(c, [&](const char* section, const char* key, auto& field) {
    const auto value = tree.get_optional<std::string>(boost::property_tree::ptree::path_type(
        std::string(section) + "/" + key, '/'));
    if (value) read_value(trim(*value), source + ": " + section + "." + key, field);
  });
  validate(c, source);
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path);
}

std::string Config::canonical() const {
  std::ostringstream out;
  std::string current;
  visit(*this, [&](const char* section, const char* key, const auto& field) {
    if (current != section) {
      out << (current.empty() ? "" : "\n") << "[" << section << "]\n";
      current = section;
    }
    out << key << " = " << write_value(field) << "\n";
  });
  return out.str();
}

std::string Config::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

std::vector<learn::ModelVariant> Config::variants() const {
  std::vector<learn::ModelVariant> out;
  for (const auto& name : variant.names) {
    learn::ModelVariant v = learn::variant_from_name(name);
    if (v.derivative_free()) v.mode = feat::DerivativeFree::identity(variant.history);
    out.push_back(v);
  }
  return out;
}

learn::LearnerConfig Config::learner() const {
  learn::LearnerConfig out;
  out.gp.restarts = gp.restarts;
  out.gp.max_iterations = gp.max_iterations;
  out.gp.grad_tol = gp.grad_tol;
  out.gp.objective_change_tol = gp.objective_change_tol;
  out.gp.log_bound = gp.log_bound;
  out.gp.ard = gp.ard;
  out.gp.rng_seed = gp.seed;
  out.max_points = gp.max_points;
  out.chain_predictions_in_training = gp.chain_predictions;
  out.df_mean = variant.df_mean == "dataset" ? learn::DfMeanSource::kDatasetColumns
                                             : learn::DfMeanSource::kFiniteDifference;
  return out;
}

std::filesystem::path output_root() {
  const char* root = std::getenv(kOutputRootVariable);
  return (root && *root) ? std::filesystem::path(root) : std::filesystem::current_path();
}

std::filesystem::path resolve_output(const std::string& dir) {
  const std::filesystem::path p(dir);
  return p.is_absolute() ? p : output_root() / p;
}

}  // namespace cascadegp::cfg
