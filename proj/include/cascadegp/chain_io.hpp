#pragma once

// Human-writable chain model files (INI-style):
//
//   [chain]
//   format = cascadegp-chain/1
//   gravity = 0 0 -9.81
//
//   [joint1]
//   rpy = 0 0 0            ; origin rotation, roll pitch yaw (rad)
//   xyz = 0 0 0.15         ; origin translation in the parent link frame (m)
//   axis = 0 0 1
//   mass = 1.2
//   com = 0 0 0.05
//   inertia = ixx ixy ixz iyy iyz izz
//
// Joint sections are numbered 1..N without gaps.

#include "cascadegp/kinchain.hpp"

#include <string>

namespace cascadegp::kin {

inline constexpr const char* kChainFormat = "cascadegp-chain/1";

KinematicChain parse_chain(const std::string& text);
KinematicChain load_chain(const std::string& path);
std::string format_chain(const KinematicChain& chain);
void save_chain(const KinematicChain& chain, const std::string& path);

}  // namespace cascadegp::kin
