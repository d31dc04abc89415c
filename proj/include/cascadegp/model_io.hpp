#pragma once

// A trained InverseDynamicsModel on disk is a directory holding
// manifest.json plus one joint_<i>.json GP document per joint.

#include "cascadegp/learner.hpp"

#include <cstdint>
#include <string>

namespace cascadegp::learn {

inline constexpr const char* kBundleFormat = "cascadegp-bundle/1";

struct BundleInfo {
  std::string dataset_fingerprint;
  std::uint64_t seed = 0;
};

void save_bundle(const InverseDynamicsModel& model, const std::string& directory, const BundleInfo& info);

struct LoadedBundle {
  InverseDynamicsModel model;
  BundleInfo info;
};

LoadedBundle load_bundle(const std::string& directory);

}  // namespace cascadegp::learn
