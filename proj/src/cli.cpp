#include "cascadegp/cli.hpp"

#include "cascadegp/chain_io.hpp"
#include "cascadegp/ctrlsim.hpp"
#include "cascadegp/error.hpp"
#include "cascadegp/experiments.hpp"
#include "cascadegp/metrics.hpp"
#include "cascadegp/model_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

namespace cascadegp::cli {
namespace fs = std::filesystem;
namespace {

constexpr const char* kTableFormat = "cascadegp-table/1";
constexpr const char* kManifestFormat = "cascadegp-run/1";

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::Vector3d to_vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

bool is_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::string first;
  std::getline(in, first);
  return first.rfind(std::string("# ") + data::kTrajectoryFormat, 0) == 0;
}

data::RawTrajectory load_any(const std::string& path, const std::string& source) {
  if (source == "sarcos") return data::load_sarcos(path);
  if (source == "file") return data::load_trajectory(path);
  return is_trajectory_file(path) ? data::load_trajectory(path) : data::load_sarcos(path);
}

kin::KinematicChain nominal_chain(const cfg::Config& config) {
  if (!config.dataset.chain.empty()) return kin::load_chain(config.dataset.chain);
  return data::synthetic_arm(config.dataset.dof);
}

class Table {
 public:
  Table(std::string name, std::vector<std::string> header) : name_(std::move(name)), header_(std::move(header)) {}

  template <class... Ts>
  void add(const Ts&... cells) {
    std::vector<std::string> row;
    (row.push_back(cell(cells)), ...);
    rows_.push_back(std::move(row));
  }
  void add_row(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
  }

  void write(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
    out << "# " << kTableFormat << " " << name_ << "\n";
    write_row(out, header_);
    for (const auto& row : rows_) write_row(out, row);
    if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
  }

 private:
  static void write_row(std::ostream& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }

  std::string name_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Run {
  std::string command;
  cfg::Config config;
  fs::path out_dir;
  std::vector<std::string> outputs;
  std::string fingerprint;
  std::ostream* out = nullptr;

  fs::path output(const std::string& name) {
    fs::create_directories(out_dir);
    outputs.push_back(name);
    return out_dir / name;
  }

  void write_manifest() {
    nlohmann::json m;
    m["format"] = kManifestFormat;
    m["command"] = command;
    m["config_hash"] = config.hash();
    m["dataset_seed"] = config.dataset.seed;
    m["gp_seed"] = config.gp.seed;
    m["sim_seed"] = config.sim.seed;
    m["dataset_fingerprint"] = fingerprint;
    m["outputs"] = outputs;
    m["config"] = config.canonical();
    fs::create_directories(out_dir);
    const fs::path path = out_dir / ("manifest_" + command + ".json");
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::kIo, "cannot write " + path.string());
    f << m.dump(2) << "\n";
    *out << "wrote " << path.string() << "\n";
  }
};

void cmd_gen(Run& run) {
  const auto& d = run.config.dataset;
  if (d.source != "synthetic") throw Error(ErrorKind::kConfig, "gen needs dataset.source = synthetic");
  const PreparedData prepared = prepare_data(run.config);
  const fs::path path = run.output("dataset.csv");
  data::save_trajectory(prepared.full, path.string());
  kin::save_chain(*prepared.chain, run.output("chain.ini").string());
  run.fingerprint = prepared.fingerprint;
  *run.out << "generated " << prepared.full.rows() << " rows, " << prepared.full.dof() << " joints -> " << path.string()
           << "\n";
}

learn::ModelVariant pick_variant(const cfg::Config& config, const std::string& name) {
  const auto variants = config.variants();
  if (name.empty()) return variants.front();
  for (const auto& v : variants) {
    if (v.name() == name) return v;
  }
  learn::ModelVariant v = learn::variant_from_name(name);
  if (v.derivative_free()) v.mode = feat::DerivativeFree::identity(config.variant.history);
  return v;
}

void cmd_train(Run& run, const std::string& variant_name, int subset, const std::string& bundle) {
  const PreparedData prepared = prepare_data(run.config);
  if (subset < 0 || subset >= static_cast<int>(prepared.subsets.size())) {
    throw Error(ErrorKind::kInvalidArgument, "subset " + std::to_string(subset) + " out of range");
  }
  const learn::ModelVariant variant = pick_variant(run.config, variant_name);
  const learn::TrainingSet set = learn::TrainingSet::from_trajectory(
      prepared.subsets[static_cast<std::size_t>(subset)], learn::required_history(variant, run.config.learner().df_mean));
  const learn::InverseDynamicsModel model =
      learn::train(variant, set, prepared.chain ? &*prepared.chain : nullptr, run.config.learner());
  const std::string dir = bundle.empty() ? (run.out_dir / ("model_" + variant.name())).string()
                                         : cfg::resolve_output(bundle).string();
  learn::save_bundle(model, dir, {prepared.fingerprint, run.config.gp.seed});
  run.outputs.push_back(dir);
  run.fingerprint = prepared.fingerprint;
  Table t("fit", {"joint", "feature_dims", "mean_iterations", "mean_evaluations", "log_likelihood"});
  for (int j = 1; j <= model.dof(); ++j) {
    const auto& gp_model = model.joint_models()[static_cast<std::size_t>(j - 1)];
    const auto& report = gp_model.fit_report();
    t.add(j, feat::feature_dims(model.feature_spec(j), model.dof()), report.mean_iterations(),
          report.mean_evaluations(), report.restarts[static_cast<std::size_t>(report.best)].log_likelihood);
  }
  t.write(run.output("fit_" + variant.name() + ".csv"));
  *run.out << "trained " << variant.name() << " on " << set.samples.size() << " rows -> " << dir << "\n";
}

void cmd_eval(Run& run, const std::string& bundle) {
  const PreparedData prepared = prepare_data(run.config);
  const learn::LoadedBundle loaded = learn::load_bundle(cfg::resolve_output(bundle).string());
  const auto& model = loaded.model;
  const auto samples = learn::usable_samples(
      model.variant(), data::to_samples(prepared.test, learn::required_history(model.variant(), model.df_mean())), model.df_mean());
  if (samples.size() < 2) throw Error(ErrorKind::kInvalidArgument, "test set has fewer than 2 usable rows");
  const Eigen::MatrixXd predicted = learn::predict_trajectory(model, samples);
  Table t("eval", {"variant", "joint", "nrmse"});
  for (int j = 0; j < model.dof(); ++j) {
    Eigen::VectorXd truth(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t s = 0; s < samples.size(); ++s) truth[static_cast<Eigen::Index>(s)] = samples[s].tau[j];
    const double e = bench::nrmse(predicted.row(j).transpose(), truth);
    t.add(model.variant().name(), j + 1, e);
    *run.out << model.variant().name() << " joint " << j + 1 << " nRMSE " << e << "\n";
  }
  t.write(run.output("eval_" + model.variant().name() + ".csv"));
  run.fingerprint = prepared.fingerprint;
}

void cmd_curve(Run& run) {
  const PreparedData prepared = prepare_data(run.config);
  const auto& e = run.config.experiment;
  std::vector<double> durations = e.durations;
  if (durations.empty()) {
    double shortest = prepared.subsets.front().rows() / prepared.subsets.front().rate;
    for (const auto& s : prepared.subsets) shortest = std::min(shortest, s.rows() / s.rate);
    durations = bench::log_duration_grid(std::min(e.grid_first, shortest), shortest, e.grid_points);
  }
  bench::CurveOptions options;
  options.learner = run.config.learner();
  options.seed = run.config.gp.seed;
  for (const auto& variant : run.config.variants()) {
    const bench::ResultTable result = bench::learning_curve(variant, prepared.subsets, durations, prepared.test,
                                                            prepared.chain ? &*prepared.chain : nullptr, options);
    Table rows("curve " + variant.name(), {"variant", "duration_s", "subset", "joint", "rows", "nrmse",
                                           "fit_iterations", "fit_evaluations", "wall_time_s"});
    for (const auto& p : result.rows) {
      rows.add(p.variant, p.duration_s, p.subset_id, p.joint, p.rows, p.nrmse, p.fit_iterations, p.fit_evaluations,
               p.wall_time_s);
    }
    rows.write(run.output("curve_" + variant.name() + ".csv"));
    Table agg("aggregate " + variant.name(), {"variant", "duration_s", "joint", "nrmse_mean", "nrmse_std", "subsets"});
    for (const auto& a : result.aggregate()) agg.add(a.variant, a.duration_s, a.joint, a.mean, a.stddev, a.count);
    agg.write(run.output("aggregate_" + variant.name() + ".csv"));
    Table sum("summary " + variant.name(), {"variant", "mark_s", "joint", "nrmse_mean", "nrmse_std", "subsets"});
    for (const auto& a : result.interval_summary(e.summary_marks)) {
      sum.add(a.variant, a.duration_s, a.joint, a.mean, a.stddev, a.count);
    }
    sum.write(run.output("summary_" + variant.name() + ".csv"));
    *run.out << "curve " << variant.name() << ": " << result.rows.size() << " points\n";
  }
  run.fingerprint = prepared.fingerprint;
}

void cmd_corr(Run& run, const std::string& data_path) {
  data::RawTrajectory traj;
  if (!data_path.empty()) {
    traj = load_any(data_path, "auto");
    run.fingerprint = data::fingerprint(traj);
  } else {
    const PreparedData prepared = prepare_data(run.config);
    traj = prepared.full;
    run.fingerprint = prepared.fingerprint;
  }
  const bench::CorrelationMatrix m = bench::spearman_matrix(traj);
  std::vector<std::string> header = {"column"};
  header.insert(header.end(), m.names.begin(), m.names.end());
  Table t("spearman_abs", header);
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    std::vector<std::string> row = {m.names[static_cast<std::size_t>(r)]};
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) row.push_back(Table::cell(m.values(r, c)));
    t.add_row(std::move(row));
  }
  t.write(run.output("corr.csv"));
  *run.out << "spearman matrix " << m.values.rows() << "x" << m.values.cols() << "\n";
}

void cmd_iters(Run& run) {
  const PreparedData prepared = prepare_data(run.config);
  bench::IterationOptions options;
  options.n_points = run.config.experiment.n_points;
  options.restarts = run.config.experiment.iter_restarts;
  options.joints = run.config.experiment.joints;
  options.learner = run.config.learner();
  const auto rows = bench::iterations_report(run.config.variants(), prepared.full, prepared.chain ? &*prepared.chain : nullptr,
                                             options);
  Table t("iterations", {"variant", "joint", "feature_dims", "points", "restarts", "mean_iterations", "mean_evaluations"});
  for (const auto& r : rows) {
    t.add(r.variant, r.joint, r.feature_dims, r.points, r.restarts, r.mean_iterations, r.mean_evaluations);
    *run.out << r.variant << " joint " << r.joint << ": " << r.mean_iterations << " iterations, " << r.mean_evaluations
             << " evaluations\n";
  }
  t.write(run.output("iterations.csv"));
  run.fingerprint = prepared.fingerprint;
}

void cmd_sim(Run& run) {
  const auto& s = run.config.sim;
  const kin::KinematicChain nominal = nominal_chain(run.config);
  const int n = nominal.dof();
  const kin::KinematicChain plant = kin::attach_payload(nominal, n - 1, s.payload_mass, to_vec3(s.payload_com));

  const Eigen::VectorXd home = s.home.empty() ? Eigen::VectorXd::Zero(n) : to_vector(s.home);
  sim::DesiredTrajectory desired;
  if (s.trajectory == "sine") {
    sim::SineTrajectorySpec spec;
    spec.sines_per_joint = s.sines;
    spec.amplitude_min = s.amplitude_min;
    spec.amplitude_max = s.amplitude_max;
    spec.frequency_min = s.frequency_min;
    spec.frequency_max = s.frequency_max;
    spec.duration = s.trajectory_duration;
    spec.seed = s.seed;
    spec.q0 = home;
    desired = sim::sine_trajectory(n, spec);
  } else {
    sim::PickTiltSpec spec;
    spec.home = home;
    spec.pick = s.pick.empty() ? home : to_vector(s.pick);
    spec.tilt_joint = s.tilt_joint;
    spec.tilt_angle = s.tilt_angle;
    spec.move_time = s.move_time;
    spec.hold_time = s.hold_time;
    desired = sim::pick_tilt_return(spec);
  }

  sim::ControllerConfig controller;
  if (s.kp.empty()) {
    sim::suggested_gains(nominal, desired.at(0.0).q, s.bandwidth_hz, s.damping, controller.kp, controller.kd);
  } else {
    controller.kp = to_vector(s.kp);
    controller.kd = to_vector(s.kd);
  }
  controller.feedforward = sim::feedforward_from_string(s.feedforward);
  controller.rbd_chain = std::make_shared<const kin::KinematicChain>(nominal);
  if (controller.feedforward == sim::FeedforwardKind::kLearned) {
    learn::LoadedBundle loaded = learn::load_bundle(cfg::resolve_output(s.model).string());
    run.fingerprint = loaded.info.dataset_fingerprint;
    controller.model = std::make_shared<const learn::InverseDynamicsModel>(std::move(loaded.model));
  }

  sim::SimOptions options;
  options.dt = s.dt;
  options.control_period = s.control_period;
  options.duration = s.duration;
  const sim::SimTrace trace = sim::simulate(plant, controller, desired, options);

  std::vector<std::string> header = {"t"};
  for (const char* prefix : {"q_des", "qd_des", "q", "qd", "tau", "error"}) {
    for (int j = 1; j <= n; ++j) header.push_back(std::string(prefix) + "_" + std::to_string(j));
  }
  Table t("sim_trace", header);
  const Eigen::MatrixXd error = trace.error();
  for (int r = 0; r < trace.rows(); ++r) {
    std::vector<std::string> row = {Table::cell(trace.t[r])};
    for (const Eigen::MatrixXd* m : {&trace.q_desired, &trace.qd_desired, &trace.q, &trace.qd, &trace.tau, &error}) {
      for (int j = 0; j < n; ++j) row.push_back(Table::cell((*m)(r, j)));
    }
    t.add_row(std::move(row));
  }
  t.write(run.output("sim_trace.csv"));
  Table summary("sim_summary", {"joint", "rms_error", "diverged", "fallback_ticks"});
  for (int j = 0; j < n; ++j) summary.add(j + 1, trace.rms_error[j], trace.diverged ? 1 : 0, trace.fallback_count);
  summary.write(run.output("sim_summary.csv"));
  *run.out << desired.label << " with " << sim::to_string(controller.feedforward) << " feedforward: RMS error";
  for (int j = 0; j < n; ++j) *run.out << " " << trace.rms_error[j];
  *run.out << (trace.diverged ? " (diverged)" : "") << "\n";
}

}  // namespace

PreparedData prepare_data(const cfg::Config& config) {
  const auto& d = config.dataset;
  PreparedData out;
  data::RawTrajectory test;
  bool separate_test = d.test_fraction == 0.0;

  if (d.source == "synthetic") {
    const kin::KinematicChain nominal = nominal_chain(config);
    const int n = nominal.dof();
    const kin::KinematicChain plant =
        kin::attach_payload(nominal, n - 1, d.payload_mass, to_vec3(d.payload_com));
    data::SineExcitationSpec spec;
    spec.sines_per_joint = d.sines;
    spec.amplitude_min = d.amplitude_min;
    spec.amplitude_max = d.amplitude_max;
    spec.frequency_min = d.frequency_min;
    spec.frequency_max = d.frequency_max;
    spec.duration = d.duration;
    spec.rate = d.rate;
    spec.seed = d.seed;
    spec.torque_noise_fraction = d.noise_fraction;
    if (d.friction != 0.0) spec.viscous_friction = Eigen::VectorXd::Constant(n, d.friction);
    out.full = data::generate_sine_dataset(plant, spec);
    out.chain = nominal;
  } else {
    out.full = load_any(d.path, d.source);
    if (!d.chain.empty()) out.chain = kin::load_chain(d.chain);
  }
  if (separate_test) test = load_any(d.test_path, d.source);

  if (d.subsample_hz > 0.0) {
    out.full = data::subsample(out.full, d.subsample_hz);
    if (separate_test) test = data::subsample(test, d.subsample_hz);
  }
  const data::Split parts = data::split(out.full, {d.n_subsets, d.test_fraction});
  out.subsets = parts.subsets;
  out.test = separate_test ? test : parts.test;
  out.fingerprint = data::fingerprint(out.full) + (separate_test ? "+" + data::fingerprint(out.test) : "");
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cascaded and semi-parametric GP inverse dynamics: data, training, benchmarks, control simulation"};
  app.require_subcommand(1);
  std::string config_path, out_dir, log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "INI run configuration")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out_dir, "output directory (relative paths resolve under $CASCADEGP_OUTPUT_ROOT)");
  };

  std::string variant_name, bundle, data_path;
  int subset = 0;
  auto* gen = app.add_subcommand("gen", "generate a synthetic sine-excitation dataset");
  add_common(gen);
  auto* train = app.add_subcommand("train", "train one variant on one subset and save a model bundle");
  add_common(train);
  train->add_option("--variant", variant_name, "variant name, e.g. SP-Inward-Cascaded (default: first configured)");
  train->add_option("--subset", subset, "training subset index")->capture_default_str();
  train->add_option("--bundle", bundle, "bundle directory (default: <out>/model_<variant>)");
  auto* eval = app.add_subcommand("eval", "score a saved bundle on the configured test set");
  add_common(eval);
  eval->add_option("--model", bundle, "bundle directory")->required();
  auto* curve = app.add_subcommand("curve", "learning curves for every configured variant");
  add_common(curve);
  auto* corr = app.add_subcommand("corr", "absolute Spearman correlation matrix of states and torques");
  add_common(corr);
  corr->add_option("--data", data_path, "SARCOS or trajectory file (default: the configured dataset)")
      ->check(CLI::ExistingFile);
  auto* iters = app.add_subcommand("iters", "optimizer iteration report");
  add_common(iters);
  auto* simc = app.add_subcommand("sim", "closed-loop tracking simulation");
  add_common(simc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(log_level));
    Run r;
    r.command = app.get_subcommands().front()->get_name();
    r.config = config_path.empty() ? cfg::Config{} : cfg::Config::load(config_path);
    r.out_dir = cfg::resolve_output(out_dir.empty() ? r.config.experiment.output_dir : out_dir);
    r.out = &out;
    if (r.command == "gen") cmd_gen(r);
    else if (r.command == "train") cmd_train(r, variant_name, subset, bundle);
    else if (r.command == "eval") cmd_eval(r, bundle);
    else if (r.command == "curve") cmd_curve(r);
    else if (r.command == "corr") cmd_corr(r, data_path);
    else if (r.command == "iters") cmd_iters(r);
    else if (r.command == "sim") cmd_sim(r);
    r.write_manifest();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    if (dynamic_cast<const Error*>(&e) && static_cast<const Error&>(e).kind() == ErrorKind::kConfig) {
      err << "\n" << app.get_subcommands().front()->help();
      return 2;
    }
    return 1;
  }
  return 0;
}

}  // namespace cascadegp::cli
