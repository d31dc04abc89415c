#pragma once

// Rigid-body model of a serial, all-revolute manipulator and the recursive
// Newton-Euler inverse dynamics built on it.
//
// Frame conventions: joint i's frame is placed in link (i-1)'s frame by a
// fixed origin transform (rotation, translation) and then rotated about the
// joint axis by q_i. The resulting frame is link i's frame; every link
// quantity (COM, inertia) is expressed in it.

#include <Eigen/Dense>

#include <vector>

namespace cascadegp::kin {

struct RigidLink {
  double mass = 0.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Eigen::Matrix3d inertia_com = Eigen::Matrix3d::Zero();  // about the COM, link frame
};

struct JointSpec {
  int parent_index = -1;  // -1 for the base
  Eigen::Matrix3d origin_rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d origin_translation = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double armature = 0.0;  // reflected rotor inertia, kg*m^2, adds armature * qdd_i to tau_i
};

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
  Eigen::VectorXd qdd;
};

class KinematicChain {
 public:
  KinematicChain() = default;

  /// Validates every link/joint invariant; throws cascadegp::Error naming the
  /// first offending joint index.
  KinematicChain(std::vector<RigidLink> links, std::vector<JointSpec> joints,
                 const Eigen::Vector3d& gravity);

  int dof() const { return static_cast<int>(links_.size()); }
  const std::vector<RigidLink>& links() const { return links_; }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const Eigen::Vector3d& gravity() const { return gravity_; }

  KinematicChain with_gravity(const Eigen::Vector3d& gravity) const;

 private:
  std::vector<RigidLink> links_;
  std::vector<JointSpec> joints_;
  Eigen::Vector3d gravity_ = Eigen::Vector3d::Zero();
};

void validate_link(const RigidLink& link, int index);
void validate_joint(const JointSpec& joint, int index);

/// Rotation matrix from roll-pitch-yaw (fixed-axis X, then Y, then Z).
Eigen::Matrix3d rpy_to_rotation(double roll, double pitch, double yaw);
Eigen::Vector3d rotation_to_rpy(const Eigen::Matrix3d& rotation);

Eigen::VectorXd rnea(const KinematicChain& chain, const JointState& state);
Eigen::VectorXd rnea(const KinematicChain& chain, const Eigen::VectorXd& q,
                     const Eigen::VectorXd& qd, const Eigen::VectorXd& qdd);

Eigen::VectorXd gravity_torques(const KinematicChain& chain, const Eigen::VectorXd& q);

/// H(q), one unit-acceleration RNEA call per column with gravity removed.
Eigen::MatrixXd mass_matrix(const KinematicChain& chain, const Eigen::VectorXd& q);

/// C(q, qd) qd + tau_g(q).
Eigen::VectorXd bias_forces(const KinematicChain& chain, const Eigen::VectorXd& q,
                            const Eigen::VectorXd& qd);

Eigen::VectorXd forward_dynamics(const KinematicChain& chain, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& tau);

/// Rigidly attaches a point mass at `com_offset` (link frame of `link_index`)
/// and returns the composite chain. The input chain is left untouched.
KinematicChain attach_payload(const KinematicChain& chain, int link_index, double mass,
                              const Eigen::Vector3d& com_offset);

/// Kinetic energy 0.5 qd^T H(q) qd.
double kinetic_energy(const KinematicChain& chain, const Eigen::VectorXd& q,
                      const Eigen::VectorXd& qd);

}  // namespace cascadegp::kin
