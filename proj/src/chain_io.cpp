#include "cascadegp/chain_io.hpp"

#include "cascadegp/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace cascadegp::kin {
namespace {

namespace pt = boost::property_tree;

std::vector<double> parse_numbers(const std::string& text, std::size_t expected, const std::string& where) {
  std::istringstream is(text);
  std::vector<double> out;
  std::string token;
  while (is >> token) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParse, where + ": '" + token + "' is not a number");
    }
  }
  if (out.size() != expected) {
    throw Error(ErrorKind::kParse, where + ": expected " + std::to_string(expected) + " numbers, got " +
                                       std::to_string(out.size()));
  }
  return out;
}

const std::string& required(const pt::ptree& section, const std::string& key, const std::string& where) {
  auto it = section.find(key);
  if (it == section.not_found()) throw Error(ErrorKind::kParse, where + ": missing key '" + key + "'");
  return it->second.data();
}

void reject_unknown(const pt::ptree& section, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : section) {
    if (!allowed.count(key)) throw Error(ErrorKind::kParse, where + ": unknown key '" + key + "'");
  }
}

std::string join(std::initializer_list<double> values) {
  std::ostringstream os;
  os << std::setprecision(17);
  bool first = true;
  for (double v : values) {
    if (!first) os << ' ';
    os << v;
    first = false;
  }
  return os.str();
}

}  // namespace

KinematicChain parse_chain(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::kParse, std::string("chain file line ") + std::to_string(e.line()) + ": " + e.message());
  }

  auto chain_it = tree.find("chain");
  if (chain_it == tree.not_found()) throw Error(ErrorKind::kParse, "missing [chain] section");
  const pt::ptree& header = chain_it->second;
  reject_unknown(header, {"format", "gravity"}, "[chain]");
  if (required(header, "format", "[chain]") != kChainFormat) {
    throw Error(ErrorKind::kParse, std::string("[chain]: unsupported format, expected ") + kChainFormat);
  }
  const auto g = parse_numbers(required(header, "gravity", "[chain]"), 3, "[chain] gravity");

  std::size_t joint_count = 0;
  for (const auto& [name, section] : tree) {
    if (name == "chain") continue;
    if (name.rfind("joint", 0) != 0) throw Error(ErrorKind::kParse, "unknown section [" + name + "]");
    ++joint_count;
  }

  std::vector<RigidLink> links;
  std::vector<JointSpec> joints;
  for (std::size_t i = 0; i < joint_count; ++i) {
    const std::string name = "joint" + std::to_string(i + 1);
    auto it = tree.find(name);
    if (it == tree.not_found()) throw Error(ErrorKind::kParse, "missing section [" + name + "]");
    const pt::ptree& s = it->second;
    const std::string where = "[" + name + "]";
    reject_unknown(s, {"rpy", "xyz", "axis", "armature", "mass", "com", "inertia"}, where);

    const auto rpy = parse_numbers(required(s, "rpy", where), 3, where + " rpy");
    const auto xyz = parse_numbers(required(s, "xyz", where), 3, where + " xyz");
    const auto axis = parse_numbers(required(s, "axis", where), 3, where + " axis");
    const auto mass = parse_numbers(required(s, "mass", where), 1, where + " mass");
    const auto com = parse_numbers(required(s, "com", where), 3, where + " com");
    const auto in = parse_numbers(required(s, "inertia", where), 6, where + " inertia");

    JointSpec joint;
    joint.parent_index = static_cast<int>(i) - 1;
    joint.origin_rotation = rpy_to_rotation(rpy[0], rpy[1], rpy[2]);
    joint.origin_translation = Eigen::Vector3d(xyz[0], xyz[1], xyz[2]);
    joint.axis = Eigen::Vector3d(axis[0], axis[1], axis[2]);
    if (s.count("armature")) joint.armature = parse_numbers(s.get<std::string>("armature"), 1, where + " armature")[0];

    RigidLink link;
    link.mass = mass[0];
    link.com = Eigen::Vector3d(com[0], com[1], com[2]);
    link.inertia_com << in[0], in[1], in[2], in[1], in[3], in[4], in[2], in[4], in[5];

    joints.push_back(joint);
    links.push_back(link);
  }
  return KinematicChain(std::move(links), std::move(joints), Eigen::Vector3d(g[0], g[1], g[2]));
}

KinematicChain load_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open chain file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_chain(buffer.str());
}

std::string format_chain(const KinematicChain& chain) {
  std::ostringstream os;
  const Eigen::Vector3d& g = chain.gravity();
  os << "[chain]\nformat = " << kChainFormat << "\ngravity = " << join({g.x(), g.y(), g.z()}) << "\n";
  for (int i = 0; i < chain.dof(); ++i) {
    const JointSpec& j = chain.joints()[i];
    const RigidLink& l = chain.links()[i];
    const Eigen::Vector3d rpy = rotation_to_rpy(j.origin_rotation);
    const Eigen::Matrix3d& in = l.inertia_com;
    os << "\n[joint" << i + 1 << "]\n"
       << "rpy = " << join({rpy.x(), rpy.y(), rpy.z()}) << "\n"
       << "xyz = " << join({j.origin_translation.x(), j.origin_translation.y(), j.origin_translation.z()}) << "\n"
       << "axis = " << join({j.axis.x(), j.axis.y(), j.axis.z()}) << "\n"
       << "armature = " << join({j.armature}) << "\n"
       << "mass = " << join({l.mass}) << "\n"
       << "com = " << join({l.com.x(), l.com.y(), l.com.z()}) << "\n"
       << "inertia = " << join({in(0, 0), in(0, 1), in(0, 2), in(1, 1), in(1, 2), in(2, 2)}) << "\n";
  }
  return os.str();
}

void save_chain(const KinematicChain& chain, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write chain file " + path);
  out << format_chain(chain);
}

}  // namespace cascadegp::kin
