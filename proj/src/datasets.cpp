#include "cascadegp/datasets.hpp"

#include "cascadegp/error.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace cascadegp::data {
namespace {

constexpr double kTwoPi = 6.28318530717958647692;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Splits on commas and/or whitespace.
std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string current;
  for (char c : line) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

double parse_cell(const std::string& token, const std::string& source, std::size_t line, std::size_t column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used == token.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::kParse, source + " line " + std::to_string(line) + " column " + std::to_string(column) +
                                     ": '" + token + "' is not numeric");
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t\r");
    const auto e = item.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

// --- RawTrajectory --------------------------------------------------------

int RawTrajectory::dof() const {
  int n = 0;
  while (has_column("q_" + std::to_string(n + 1))) ++n;
  return n;
}

bool RawTrajectory::has_column(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

int RawTrajectory::column_index(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorKind::kMissingInput, "trajectory has no column '" + name + "'");
  return static_cast<int>(it - names.begin());
}

Eigen::VectorXd RawTrajectory::column(const std::string& name) const { return values.col(column_index(name)); }

Eigen::MatrixXd RawTrajectory::block(const std::string& prefix) const {
  const int n = dof();
  Eigen::MatrixXd out(rows(), n);
  for (int j = 0; j < n; ++j) out.col(j) = column(prefix + "_" + std::to_string(j + 1));
  return out;
}

void RawTrajectory::validate() const {
  if (static_cast<Eigen::Index>(names.size()) != values.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "column names do not match the value matrix");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      if (names[i] == names[j]) throw Error(ErrorKind::kInvalidArgument, "duplicate column '" + names[i] + "'");
    }
  }
  if (!(rate > 0.0)) throw Error(ErrorKind::kInvalidArgument, "sample rate must be positive");
  if (has_column("t")) {
    const Eigen::VectorXd t = column("t");
    for (Eigen::Index i = 1; i < t.size(); ++i) {
      if (!(t[i] > t[i - 1])) {
        throw Error(ErrorKind::kInvalidArgument, "timestamps not strictly increasing at row " + std::to_string(i));
      }
    }
  }
}

std::vector<std::string> standard_columns(int dof) {
  std::vector<std::string> names{"t"};
  for (const char* prefix : {"q", "qd", "qdd", "tau"}) {
    for (int j = 1; j <= dof; ++j) names.push_back(std::string(prefix) + "_" + std::to_string(j));
  }
  return names;
}

RawTrajectory make_trajectory(const Eigen::VectorXd& t, const Eigen::MatrixXd& q, const Eigen::MatrixXd& qd,
                              const Eigen::MatrixXd& qdd, const Eigen::MatrixXd& tau, double rate, std::string meta) {
  const Eigen::Index rows = t.size();
  const Eigen::Index n = q.cols();
  for (const Eigen::MatrixXd* m : {&q, &qd, &qdd, &tau}) {
    if (m->rows() != rows || m->cols() != n) throw Error(ErrorKind::kDimensionMismatch, "trajectory blocks");
  }
  RawTrajectory traj;
  traj.names = standard_columns(static_cast<int>(n));
  traj.values.resize(rows, 1 + 4 * n);
  traj.values.col(0) = t;
  traj.values.middleCols(1, n) = q;
  traj.values.middleCols(1 + n, n) = qd;
  traj.values.middleCols(1 + 2 * n, n) = qdd;
  traj.values.middleCols(1 + 3 * n, n) = tau;
  traj.rate = rate;
  traj.meta = std::move(meta);
  traj.validate();
  return traj;
}

// --- SARCOS -----------------------------------------------------------------

RawTrajectory parse_sarcos(const std::string& text, const std::string& source) {
  constexpr int kColumns = 4 * kSarcosDof;
  std::vector<double> cells;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() != static_cast<std::size_t>(kColumns)) {
      throw Error(ErrorKind::kParse, source + " line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(kColumns) + " columns, got " + std::to_string(tokens.size()));
    }
    for (std::size_t c = 0; c < tokens.size(); ++c) cells.push_back(parse_cell(tokens[c], source, line_no, c + 1));
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::kParse, source + ": no data rows");

  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> raw(
      cells.data(), static_cast<Eigen::Index>(rows), kColumns);
  const Eigen::VectorXd t =
      Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(rows), 0.0, static_cast<double>(rows - 1)) / kSarcosRate;
  RawTrajectory traj = make_trajectory(t, raw.leftCols(7), raw.middleCols(7, 7), raw.middleCols(14, 7),
                                       raw.rightCols(7), kSarcosRate, "sarcos:" + source);

  // Plausibility of the assumed column layout.
  const Eigen::MatrixXd q = traj.block("q");
  if (q.cwiseAbs().maxCoeff() > 2.0 * kTwoPi) {
    spdlog::warn("{}: position columns exceed 4*pi; column layout may differ from q|qd|qdd|tau", source);
  }
  const Eigen::MatrixXd tau = traj.block("tau");
  Eigen::VectorXd var(kSarcosDof);
  for (int j = 0; j < kSarcosDof; ++j) var[j] = (tau.col(j).array() - tau.col(j).mean()).square().mean();
  Eigen::Index top = 0;
  var.maxCoeff(&top);
  if (top > 3) spdlog::warn("{}: largest torque variance on distal joint {}", source, top + 1);
  return traj;
}

RawTrajectory load_sarcos(const std::string& path) { return parse_sarcos(read_file(path), path); }

// --- trajectory files ---------------------------------------------------------

RawTrajectory load_trajectory(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind(std::string("# ") + kTrajectoryFormat, 0) != 0) {
    throw Error(ErrorKind::kParse, path + " line 1: expected '# " + std::string(kTrajectoryFormat) + " ...' header");
  }
  RawTrajectory traj;
  {
    std::istringstream header(line.substr(2 + std::strlen(kTrajectoryFormat)));
    std::string item;
    while (header >> item) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = item.substr(0, eq);
      const std::string value = item.substr(eq + 1);
      if (key == "rate") traj.rate = parse_cell(value, path, 1, 0);
      if (key == "meta") traj.meta = value;
    }
  }
  if (!std::getline(is, line)) throw Error(ErrorKind::kParse, path + " line 2: missing column names");
  traj.names = split_commas(line);
  const std::size_t width = traj.names.size();

  std::vector<double> cells;
  std::size_t line_no = 2;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto tokens = split_commas(line);
    if (tokens.size() != width) {
      throw Error(ErrorKind::kParse, path + " line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(width) + " columns, got " + std::to_string(tokens.size()));
    }
    for (std::size_t c = 0; c < width; ++c) cells.push_back(parse_cell(tokens[c], path, line_no, c + 1));
    ++rows;
  }
  traj.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      cells.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  traj.validate();
  return traj;
}

void save_trajectory(const RawTrajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << "# " << kTrajectoryFormat << " rate=" << std::setprecision(17) << traj.rate << " dof=" << traj.dof();
  if (!traj.meta.empty()) {
    std::string meta = traj.meta;
    std::replace(meta.begin(), meta.end(), ' ', '_');
    out << " meta=" << meta;
  }
  out << "\n";
  for (std::size_t c = 0; c < traj.names.size(); ++c) out << (c ? "," : "") << traj.names[c];
  out << "\n";
  for (int r = 0; r < traj.rows(); ++r) {
    for (Eigen::Index c = 0; c < traj.values.cols(); ++c) out << (c ? "," : "") << traj.values(r, c);
    out << "\n";
  }
}

// --- slicing ----------------------------------------------------------------

RawTrajectory subsample(const RawTrajectory& traj, double target_hz) {
  if (!(target_hz > 0.0)) throw Error(ErrorKind::kInvalidArgument, "target rate must be positive");
  if (target_hz > traj.rate * (1.0 + 1e-9)) {
    throw Error(ErrorKind::kInvalidArgument, "cannot upsample " + std::to_string(traj.rate) + " Hz to " +
                                                 std::to_string(target_hz) + " Hz");
  }
  const int step = std::max(1, static_cast<int>(std::floor(traj.rate / target_hz + 1e-9)));
  const int rows = (traj.rows() + step - 1) / step;
  RawTrajectory out;
  out.names = traj.names;
  out.values.resize(rows, traj.values.cols());
  for (int r = 0; r < rows; ++r) out.values.row(r) = traj.values.row(r * step);
  out.rate = traj.rate / step;
  out.meta = traj.meta;
  return out;
}

RawTrajectory slice(const RawTrajectory& traj, int begin, int count) {
  if (begin < 0 || count < 0 || begin + count > traj.rows()) {
    throw Error(ErrorKind::kInvalidArgument, "slice [" + std::to_string(begin) + ", +" + std::to_string(count) +
                                                 ") outside " + std::to_string(traj.rows()) + " rows");
  }
  RawTrajectory out;
  out.names = traj.names;
  out.values = traj.values.middleRows(begin, count);
  out.rate = traj.rate;
  out.meta = traj.meta;
  return out;
}

void SplitSpec::validate() const {
  if (n_subsets < 1) throw Error(ErrorKind::kInvalidArgument, "n_subsets must be >= 1");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "test_fraction must lie in [0, 1)");
  }
}

Split split(const RawTrajectory& traj, const SplitSpec& spec) {
  spec.validate();
  const int n_test = static_cast<int>(std::lround(traj.rows() * spec.test_fraction));
  const int n_train = traj.rows() - n_test;
  if (n_train < spec.n_subsets || (spec.test_fraction > 0.0 && n_test < 1)) {
    throw Error(ErrorKind::kInvalidArgument, "too few rows (" + std::to_string(traj.rows()) + ") for " +
                                                 std::to_string(spec.n_subsets) + " subsets and a test set");
  }
  Split out;
  const int base = n_train / spec.n_subsets;
  const int extra = n_train % spec.n_subsets;
  int begin = 0;
  for (int s = 0; s < spec.n_subsets; ++s) {
    const int count = base + (s < extra ? 1 : 0);
    out.subsets.push_back(slice(traj, begin, count));
    begin += count;
  }
  out.test = slice(traj, n_train, n_test);
  return out;
}

// --- synthesis ----------------------------------------------------------------

void SineExcitationSpec::validate(int dof) const {
  if (sines_per_joint < 0) throw Error(ErrorKind::kInvalidArgument, "sines_per_joint must be >= 0");
  if (amplitude_min < 0.0 || amplitude_max < amplitude_min) {
    throw Error(ErrorKind::kInvalidArgument, "amplitude range must satisfy 0 <= min <= max");
  }
  if (!(frequency_min > 0.0) || frequency_max < frequency_min) {
    throw Error(ErrorKind::kInvalidArgument, "frequency range must satisfy 0 < min <= max");
  }
  if (!(duration > 0.0) || !(rate > 0.0)) throw Error(ErrorKind::kInvalidArgument, "duration and rate must be > 0");
  if (torque_noise_fraction < 0.0) throw Error(ErrorKind::kInvalidArgument, "noise fraction must be >= 0");
  if (viscous_friction.size() != 0 && viscous_friction.size() != dof) {
    throw Error(ErrorKind::kDimensionMismatch, "viscous_friction needs one entry per joint");
  }
  if (q0.size() != 0 && q0.size() != dof) throw Error(ErrorKind::kDimensionMismatch, "q0 needs one entry per joint");
}

RawTrajectory generate_sine_dataset(const kin::KinematicChain& chain, const SineExcitationSpec& spec) {
  const int n = chain.dof();
  spec.validate(n);
  const int rows = static_cast<int>(std::floor(spec.duration * spec.rate + 1e-9));
  if (rows < 1) throw Error(ErrorKind::kInvalidArgument, "duration * rate yields no rows");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Wave {
    double amplitude, omega, phase;
  };
  std::vector<std::vector<Wave>> waves(n);
  for (int j = 0; j < n; ++j) {
    for (int s = 0; s < spec.sines_per_joint; ++s) {
      const double a = spec.amplitude_min + (spec.amplitude_max - spec.amplitude_min) * unit(rng);
      const double f = spec.frequency_min + (spec.frequency_max - spec.frequency_min) * unit(rng);
      waves[j].push_back({a, kTwoPi * f, kTwoPi * unit(rng)});
    }
  }

  const Eigen::VectorXd q0 = spec.q0.size() ? spec.q0 : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd t(rows);
  Eigen::MatrixXd q(rows, n), qd(rows, n), qdd(rows, n), tau(rows, n);
  for (int r = 0; r < rows; ++r) {
    t[r] = r / spec.rate;
    for (int j = 0; j < n; ++j) {
      double pos = q0[j], vel = 0.0, acc = 0.0;
      for (const Wave& w : waves[j]) {
        const double arg = w.omega * t[r] + w.phase;
        pos += w.amplitude / w.omega * (std::cos(w.phase) - std::cos(arg));
        vel += w.amplitude * std::sin(arg);
        acc += w.amplitude * w.omega * std::cos(arg);
      }
      q(r, j) = pos;
      qd(r, j) = vel;
      qdd(r, j) = acc;
    }
    tau.row(r) = kin::rnea(chain, q.row(r).transpose(), qd.row(r).transpose(), qdd.row(r).transpose()).transpose();
  }
  if (spec.viscous_friction.size()) tau += qd * spec.viscous_friction.asDiagonal();
  if (spec.torque_noise_fraction > 0.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int j = 0; j < n; ++j) {
      const double sd = std::sqrt((tau.col(j).array() - tau.col(j).mean()).square().mean());
      const double sigma = spec.torque_noise_fraction * sd;
      for (int r = 0; r < rows; ++r) tau(r, j) += sigma * gauss(rng);
    }
  }
  std::ostringstream meta;
  meta << "sine:seed=" << spec.seed;
  return make_trajectory(t, q, qd, qdd, tau, spec.rate, meta.str());
}

Derivatives differentiate(const Eigen::MatrixXd& positions, double rate, int smoothing_window) {
  const Eigen::Index rows = positions.rows();
  if (rows < 3) throw Error(ErrorKind::kInvalidArgument, "differentiation needs at least 3 samples");
  if (!(rate > 0.0)) throw Error(ErrorKind::kInvalidArgument, "rate must be positive");
  if (smoothing_window < 1) throw Error(ErrorKind::kInvalidArgument, "smoothing window must be >= 1");

  Eigen::MatrixXd x = positions;
  if (smoothing_window > 1) {
    const Eigen::Index half = smoothing_window / 2;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, r - half);
      const Eigen::Index hi = std::min<Eigen::Index>(rows - 1, r + half);
      x.row(r) = positions.middleRows(lo, hi - lo + 1).colwise().mean();
    }
  }

  const double dt = 1.0 / rate;
  Derivatives out;
  out.velocity.resize(rows, positions.cols());
  out.acceleration.resize(rows, positions.cols());
  for (Eigen::Index r = 1; r + 1 < rows; ++r) {
    out.velocity.row(r) = (x.row(r + 1) - x.row(r - 1)) / (2.0 * dt);
    out.acceleration.row(r) = (x.row(r + 1) - 2.0 * x.row(r) + x.row(r - 1)) / (dt * dt);
  }
  out.velocity.row(0) = (x.row(1) - x.row(0)) / dt;
  out.velocity.row(rows - 1) = (x.row(rows - 1) - x.row(rows - 2)) / dt;
  out.acceleration.row(0) = (x.row(2) - 2.0 * x.row(1) + x.row(0)) / (dt * dt);
  out.acceleration.row(rows - 1) = (x.row(rows - 1) - 2.0 * x.row(rows - 2) + x.row(rows - 3)) / (dt * dt);
  return out;
}

std::string fingerprint(const RawTrajectory& traj) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ULL;
    }
  };
  for (const auto& name : traj.names) mix(name.data(), name.size() + 1);
  for (Eigen::Index r = 0; r < traj.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < traj.values.cols(); ++c) {
      const double v = traj.values(r, c);
      mix(&v, sizeof v);
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash;
  return os.str();
}

std::vector<feat::Sample> to_samples(const RawTrajectory& traj, int history) {
  if (history < 0) throw Error(ErrorKind::kInvalidArgument, "history must be >= 0");
  const int n = traj.dof();
  if (n < 1) throw Error(ErrorKind::kMissingInput, "trajectory has no q_1 column");
  const Eigen::MatrixXd q = traj.block("q");
  const Eigen::MatrixXd qd = traj.block("qd");
  const Eigen::MatrixXd qdd = traj.block("qdd");
  const Eigen::MatrixXd tau = traj.block("tau");
  const bool has_t = traj.has_column("t");
  std::vector<feat::Sample> samples(traj.rows());
  for (int r = 0; r < traj.rows(); ++r) {
    feat::Sample& s = samples[r];
    s.t = has_t ? traj.values(r, traj.column_index("t")) : r / traj.rate;
    s.q = q.row(r).transpose();
    s.qd = qd.row(r).transpose();
    s.qdd = qdd.row(r).transpose();
    s.tau = tau.row(r).transpose();
    if (r >= history) {
      s.q_history.resize(n, history + 1);
      for (int c = 0; c <= history; ++c) s.q_history.col(c) = q.row(r - c).transpose();
    }
  }
  return samples;
}

kin::KinematicChain synthetic_arm(int dof) {
  if (dof < 1 || dof > 7) throw Error(ErrorKind::kInvalidArgument, "synthetic arms have 1..7 joints");
  // Alternating vertical/horizontal axes, links stacked along local z.
  const double offsets[] = {0.10, 0.12, 0.40, 0.30, 0.10, 0.10, 0.08, 0.08};
  const double masses[] = {2.0, 2.5, 1.8, 1.0, 0.7, 0.5, 0.3};
  // Geared drives: reflected rotor inertia keeps H diagonally dominant.
  const double armatures[] = {0.5, 0.5, 0.3, 0.075, 0.075, 0.05, 0.05};
  const Eigen::Vector3d axes[] = {Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitY(),
                                  Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitZ(),
                                  Eigen::Vector3d::UnitY()};
  std::vector<kin::RigidLink> links;
  std::vector<kin::JointSpec> joints;
  for (int i = 0; i < dof; ++i) {
    kin::JointSpec joint;
    joint.parent_index = i - 1;
    joint.origin_translation = Eigen::Vector3d(0.0, 0.0, offsets[i]);
    joint.axis = axes[i];
    joint.armature = armatures[i];
    const double length = offsets[i + 1];
    const double radius = 0.04;
    kin::RigidLink link;
    link.mass = masses[i];
    link.com = Eigen::Vector3d(0.02, 0.01, 0.5 * length);
    const double transverse = link.mass * (length * length / 12.0 + radius * radius / 4.0);
    link.inertia_com = Eigen::Vector3d(transverse, transverse, 0.5 * link.mass * radius * radius).asDiagonal();
    joints.push_back(joint);
    links.push_back(link);
  }
  return kin::KinematicChain(std::move(links), std::move(joints), Eigen::Vector3d(0.0, 0.0, -9.81));
}

kin::KinematicChain planar_two_link(double m1, double m2, double l1, double lc1, double lc2, double izz1, double izz2,
                                    double gravity) {
  kin::JointSpec j1, j2;
  j1.parent_index = -1;
  j2.parent_index = 0;
  j2.origin_translation = Eigen::Vector3d(l1, 0.0, 0.0);
  kin::RigidLink a, b;
  a.mass = m1;
  a.com = Eigen::Vector3d(lc1, 0.0, 0.0);
  a.inertia_com = Eigen::Vector3d(0.0, izz1, izz1).asDiagonal();
  b.mass = m2;
  b.com = Eigen::Vector3d(lc2, 0.0, 0.0);
  b.inertia_com = Eigen::Vector3d(0.0, izz2, izz2).asDiagonal();
  return kin::KinematicChain({a, b}, {j1, j2}, Eigen::Vector3d(0.0, -gravity, 0.0));
}

}  // namespace cascadegp::data
