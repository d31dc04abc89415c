#pragma once

#include "cascadegp/config.hpp"
#include "cascadegp/datasets.hpp"
#include "cascadegp/kinchain.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cascadegp::cli {

struct PreparedData {
  data::RawTrajectory full;  // after subsampling, before splitting
  std::vector<data::RawTrajectory> subsets;
  data::RawTrajectory test;
  std::optional<kin::KinematicChain> chain;  // nominal model, without any payload
  std::string fingerprint;
};

/// Loads or generates the configured dataset, subsamples and splits it.
PreparedData prepare_data(const cfg::Config& config);

/// Runs one subcommand. Returns 0 on success, 1 on a runtime error and 2 on a
/// usage error; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cascadegp::cli
