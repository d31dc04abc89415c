#include "cascadegp/kinchain.hpp"

#include "cascadegp/error.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace cascadegp::kin {
namespace {

std::string joint_label(int index) { return "joint " + std::to_string(index + 1); }

void require_size(const Eigen::VectorXd& v, int n, const char* name) {
  if (v.size() != n) {
    std::ostringstream os;
    os << name << " has length " << v.size() << ", chain has " << n << " joints";
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
}

void require_finite(const Eigen::VectorXd& v, const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(ErrorKind::kNonFinite, std::string(name) + "[" + std::to_string(i) + "]");
    }
  }
}

void check_inputs(const KinematicChain& chain, const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                  const Eigen::VectorXd& qdd) {
  const int n = chain.dof();
  require_size(q, n, "q");
  require_size(qd, n, "qd");
  require_size(qdd, n, "qdd");
  require_finite(q, "q");
  require_finite(qd, "qd");
  require_finite(qdd, "qdd");
}

// Newton-Euler recursion with an explicit base acceleration. Passing
// -gravity as the base acceleration folds gravity into every link force.
Eigen::VectorXd newton_euler(const KinematicChain& chain, const Eigen::VectorXd& q,
                             const Eigen::VectorXd& qd, const Eigen::VectorXd& qdd,
                             const Eigen::Vector3d& gravity) {
  const int n = chain.dof();
  const auto& links = chain.links();
  const auto& joints = chain.joints();

  std::vector<Eigen::Matrix3d> rot(n);  // link i -> link i-1 coordinates
  std::vector<Eigen::Vector3d> force(n), moment(n);

  Eigen::Vector3d w = Eigen::Vector3d::Zero();
  Eigen::Vector3d wd = Eigen::Vector3d::Zero();
  Eigen::Vector3d a = -gravity;

  for (int i = 0; i < n; ++i) {
    const JointSpec& joint = joints[i];
    const RigidLink& link = links[i];
    rot[i] = joint.origin_rotation * Eigen::AngleAxisd(q[i], joint.axis).toRotationMatrix();
    const Eigen::Matrix3d rt = rot[i].transpose();
    const Eigen::Vector3d& p = joint.origin_translation;

    const Eigen::Vector3d a_origin = rt * (a + wd.cross(p) + w.cross(w.cross(p)));
    const Eigen::Vector3d w_parent = rt * w;
    const Eigen::Vector3d wd_parent = rt * wd;
    w = w_parent + qd[i] * joint.axis;
    wd = wd_parent + qdd[i] * joint.axis + w_parent.cross(qd[i] * joint.axis);
    a = a_origin;

    const Eigen::Vector3d a_com = a + wd.cross(link.com) + w.cross(w.cross(link.com));
    force[i] = link.mass * a_com;
    moment[i] = link.inertia_com * wd + w.cross(link.inertia_com * w);
  }

  Eigen::VectorXd tau(n);
  Eigen::Vector3d f_child = Eigen::Vector3d::Zero();
  Eigen::Vector3d n_child = Eigen::Vector3d::Zero();
  for (int i = n - 1; i >= 0; --i) {
    Eigen::Vector3d f = force[i];
    Eigen::Vector3d m = moment[i] + links[i].com.cross(force[i]);
    if (i + 1 < n) {
      const Eigen::Vector3d f_in = rot[i + 1] * f_child;
      f += f_in;
      m += rot[i + 1] * n_child + joints[i + 1].origin_translation.cross(f_in);
    }
    tau[i] = m.dot(joints[i].axis) + joints[i].armature * qdd[i];
    f_child = f;
    n_child = m;
  }
  return tau;
}

}  // namespace

void validate_link(const RigidLink& link, int index) {
  const std::string who = joint_label(index);
  if (!std::isfinite(link.mass) || link.mass < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, who + ": mass must be finite and >= 0");
  }
  if (!link.com.allFinite() || !link.inertia_com.allFinite()) {
    throw Error(ErrorKind::kNonFinite, who + ": non-finite COM or inertia");
  }
  const Eigen::Matrix3d& inertia = link.inertia_com;
  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorKind::kInvalidArgument, who + ": inertia is not symmetric");
  }
  const double scale = std::max(1.0, inertia.cwiseAbs().maxCoeff());
  const Eigen::Vector3d principal = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(inertia).eigenvalues();
  if (principal.minCoeff() < -1e-12 * scale) {
    throw Error(ErrorKind::kInvalidArgument, who + ": inertia is not positive semi-definite");
  }
  for (int k = 0; k < 3; ++k) {
    if (principal[k] + principal[(k + 1) % 3] < principal[(k + 2) % 3] - 1e-12 * scale) {
      throw Error(ErrorKind::kInvalidArgument, who + ": principal moments violate the triangle inequality");
    }
  }
}

void validate_joint(const JointSpec& joint, int index) {
  const std::string who = joint_label(index);
  if (joint.parent_index != index - 1) {
    throw Error(ErrorKind::kInvalidArgument, who + ": parent must be the previous link (serial chain)");
  }
  const Eigen::Matrix3d& r = joint.origin_rotation;
  if (!r.allFinite() || !joint.origin_translation.allFinite() || !joint.axis.allFinite()) {
    throw Error(ErrorKind::kNonFinite, who + ": non-finite origin or axis");
  }
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10 ||
      std::abs(r.determinant() - 1.0) > 1e-10) {
    throw Error(ErrorKind::kInvalidArgument, who + ": origin rotation is not a proper rotation");
  }
  if (!std::isfinite(joint.armature) || joint.armature < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, who + ": armature must be finite and >= 0");
  }
  if (std::abs(joint.axis.norm() - 1.0) > 1e-10) {
    throw Error(ErrorKind::kInvalidArgument, who + ": axis is not a unit vector");
  }
}

KinematicChain::KinematicChain(std::vector<RigidLink> links, std::vector<JointSpec> joints,
                               const Eigen::Vector3d& gravity)
    : links_(std::move(links)), joints_(std::move(joints)), gravity_(gravity) {
  if (links_.empty() || links_.size() != joints_.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "chain needs N >= 1 links and the same number of joints");
  }
  if (!gravity_.allFinite()) throw Error(ErrorKind::kNonFinite, "gravity");
  for (int i = 0; i < dof(); ++i) {
    validate_joint(joints_[i], i);
    validate_link(links_[i], i);
  }
}

KinematicChain KinematicChain::with_gravity(const Eigen::Vector3d& gravity) const {
  KinematicChain copy = *this;
  copy.gravity_ = gravity;
  return copy;
}

Eigen::Matrix3d rpy_to_rotation(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

Eigen::Vector3d rotation_to_rpy(const Eigen::Matrix3d& r) {
  const double pitch = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0)));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  return {roll, pitch, yaw};
}

Eigen::VectorXd rnea(const KinematicChain& chain, const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                     const Eigen::VectorXd& qdd) {
  check_inputs(chain, q, qd, qdd);
  return newton_euler(chain, q, qd, qdd, chain.gravity());
}

Eigen::VectorXd rnea(const KinematicChain& chain, const JointState& state) {
  return rnea(chain, state.q, state.qd, state.qdd);
}

Eigen::VectorXd gravity_torques(const KinematicChain& chain, const Eigen::VectorXd& q) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(chain.dof());
  return rnea(chain, q, zero, zero);
}

Eigen::MatrixXd mass_matrix(const KinematicChain& chain, const Eigen::VectorXd& q) {
  const int n = chain.dof();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  check_inputs(chain, q, zero, zero);
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd unit = zero;
  for (int j = 0; j < n; ++j) {
    unit[j] = 1.0;
    h.col(j) = newton_euler(chain, q, zero, unit, Eigen::Vector3d::Zero());
    unit[j] = 0.0;
  }
  // Columns are exact up to rounding; symmetrize the round-off.
  return 0.5 * (h + h.transpose());
}

Eigen::VectorXd bias_forces(const KinematicChain& chain, const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
  return rnea(chain, q, qd, Eigen::VectorXd::Zero(chain.dof()));
}

Eigen::VectorXd forward_dynamics(const KinematicChain& chain, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& tau) {
  require_size(tau, chain.dof(), "tau");
  require_finite(tau, "tau");
  const Eigen::MatrixXd h = mass_matrix(chain, q);
  const Eigen::VectorXd rhs = tau - bias_forces(chain, q, qd);
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "mass matrix not positive definite at q = [" << q.transpose() << "]";
    throw Error(ErrorKind::kFactorization, os.str());
  }
  return llt.solve(rhs);
}

KinematicChain attach_payload(const KinematicChain& chain, int link_index, double mass,
                              const Eigen::Vector3d& com_offset) {
  if (link_index < 0 || link_index >= chain.dof()) {
    throw Error(ErrorKind::kInvalidArgument, "payload link index " + std::to_string(link_index) + " out of range");
  }
  if (!std::isfinite(mass) || mass < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "payload mass must be finite and >= 0");
  }
  if (!com_offset.allFinite()) throw Error(ErrorKind::kNonFinite, "payload offset");
  if (mass == 0.0) return chain;

  std::vector<RigidLink> links = chain.links();
  RigidLink& link = links[link_index];
  const double total = link.mass + mass;
  const Eigen::Vector3d com = (link.mass * link.com + mass * com_offset) / total;

  // Parallel-axis shift of each body's inertia to the composite COM.
  auto shifted = [](double m, const Eigen::Vector3d& r) -> Eigen::Matrix3d {
    return m * (r.squaredNorm() * Eigen::Matrix3d::Identity() - r * r.transpose());
  };
  Eigen::Matrix3d inertia = link.inertia_com + shifted(link.mass, link.com - com) + shifted(mass, com_offset - com);
  inertia = 0.5 * (inertia + inertia.transpose());

  link.mass = total;
  link.com = com;
  link.inertia_com = inertia;
  return KinematicChain(std::move(links), chain.joints(), chain.gravity());
}

double kinetic_energy(const KinematicChain& chain, const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
  require_size(qd, chain.dof(), "qd");
  return 0.5 * qd.dot(mass_matrix(chain, q) * qd);
}

}  // namespace cascadegp::kin
