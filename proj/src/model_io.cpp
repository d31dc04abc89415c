#include "cascadegp/model_io.hpp"

#include "cascadegp/chain_io.hpp"
#include "cascadegp/error.hpp"
#include "cascadegp/gp_io.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

namespace cascadegp::learn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string joint_file(int joint) { return "joint_" + std::to_string(joint) + ".json"; }

json projection_json(const feat::DerivativeMode& mode) {
  const auto* df = std::get_if<feat::DerivativeFree>(&mode);
  if (!df) return nullptr;
  json rows = json::array();
  for (Eigen::Index r = 0; r < df->projection.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < df->projection.cols(); ++c) row.push_back(df->projection(r, c));
    rows.push_back(row);
  }
  return {{"history", df->history}, {"projection", rows}};
}

}  // namespace

void save_bundle(const InverseDynamicsModel& model, const std::string& directory, const BundleInfo& info) {
  fs::create_directories(directory);
  const ModelVariant& v = model.variant();
  json manifest = {
      {"format", kBundleFormat},
      {"variant", v.name()},
      {"derivative_free", projection_json(v.mode)},
      {"dof", model.dof()},
      {"cascade_order", model.cascade_order()},
      {"sample_period", model.sample_period()},
      {"df_mean", model.df_mean() == DfMeanSource::kFiniteDifference ? "finite_difference" : "dataset_columns"},
      {"dataset_fingerprint", info.dataset_fingerprint},
      {"seed", info.seed},
      {"chain", model.chain() ? json(kin::format_chain(*model.chain())) : json(nullptr)},
      {"joints", json::array()}};
  for (int j = 1; j <= model.dof(); ++j) {
    gp::save_model(model.joint_models()[j - 1], (fs::path(directory) / joint_file(j)).string());
    manifest["joints"].push_back(joint_file(j));
  }
  std::ofstream out(fs::path(directory) / "manifest.json");
  if (!out) throw Error(ErrorKind::kIo, "cannot write manifest in " + directory);
  out << manifest.dump(2) << "\n";
}

LoadedBundle load_bundle(const std::string& directory) {
  const fs::path manifest_path = fs::path(directory) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + manifest_path.string());
  try {
    const json manifest = json::parse(in);
    if (manifest.at("format").get<std::string>() != kBundleFormat) {
      throw Error(ErrorKind::kParse, std::string("unsupported bundle format, expected ") + kBundleFormat);
    }
    ModelVariant variant = variant_from_name(manifest.at("variant").get<std::string>());
    if (const json& df = manifest.at("derivative_free"); !df.is_null()) {
      feat::DerivativeFree mode;
      mode.history = df.at("history").get<int>();
      const json& rows = df.at("projection");
      mode.projection.resize(static_cast<Eigen::Index>(rows.size()), mode.history + 1);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (int c = 0; c <= mode.history; ++c) mode.projection(static_cast<Eigen::Index>(r), c) = rows[r].at(c);
      }
      mode.validate();
      variant.mode = mode;
    }
    std::shared_ptr<const kin::KinematicChain> chain;
    if (!manifest.at("chain").is_null()) {
      chain = std::make_shared<const kin::KinematicChain>(kin::parse_chain(manifest.at("chain").get<std::string>()));
    }
    std::vector<gp::GPModel> joints;
    for (const auto& file : manifest.at("joints")) {
      joints.push_back(gp::load_model((fs::path(directory) / file.get<std::string>()).string()));
    }
    const DfMeanSource df_mean = manifest.at("df_mean").get<std::string>() == "finite_difference"
                                     ? DfMeanSource::kFiniteDifference
                                     : DfMeanSource::kDatasetColumns;
    BundleInfo info{manifest.at("dataset_fingerprint").get<std::string>(), manifest.at("seed").get<std::uint64_t>()};
    return {InverseDynamicsModel(variant, std::move(joints), chain, manifest.at("cascade_order").get<std::vector<int>>(),
                                 manifest.at("sample_period").get<double>(), df_mean),
            info};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, manifest_path.string() + ": " + e.what());
  }
}

}  // namespace cascadegp::learn
