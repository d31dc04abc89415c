#include "cascadegp/gp_io.hpp"

#include "cascadegp/chain_io.hpp"
#include "cascadegp/error.hpp"

#include <fstream>

namespace cascadegp::gp {
namespace {

using nlohmann::json;

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_vec(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd from_rows(const json& j) {
  const Eigen::Index n = static_cast<Eigen::Index>(j.size());
  if (n == 0) return {};
  const Eigen::Index d = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd row = to_vec(j.at(i));
    if (row.size() != d) throw Error(ErrorKind::kParse, "ragged train_inputs row " + std::to_string(i));
    m.row(i) = row.transpose();
  }
  return m;
}

}  // namespace

json mean_to_json(const MeanFunction& mean) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ZeroMean>) {
          return {{"type", "zero"}};
        } else if constexpr (std::is_same_v<T, ConstantMean>) {
          return {{"type", "constant"}, {"value", m.value}};
        } else if constexpr (std::is_same_v<T, RbdMean>) {
          json hist = json::array();
          for (const auto& h : m.history_cols) hist.push_back({h[0], h[1], h[2]});
          return {{"type", "rbd"},         {"joint", m.joint},       {"chain", kin::format_chain(*m.chain)},
                  {"q_cols", m.q_cols},    {"qd_cols", m.qd_cols},   {"qdd_cols", m.qdd_cols},
                  {"history_cols", hist},  {"period", m.period}};
        } else {
          throw Error(ErrorKind::kInvalidArgument, "mean function '" + m.label + "' is not serializable");
        }
      },
      mean.variant());
}

MeanFunction mean_from_json(const json& doc) {
  const std::string type = doc.at("type").get<std::string>();
  if (type == "zero") return ZeroMean{};
  if (type == "constant") return ConstantMean{doc.at("value").get<double>()};
  if (type == "rbd") {
    RbdMean m;
    m.chain = std::make_shared<const kin::KinematicChain>(kin::parse_chain(doc.at("chain").get<std::string>()));
    m.joint = doc.at("joint").get<int>();
    m.q_cols = doc.at("q_cols").get<std::vector<int>>();
    m.qd_cols = doc.at("qd_cols").get<std::vector<int>>();
    m.qdd_cols = doc.at("qdd_cols").get<std::vector<int>>();
    for (const auto& h : doc.at("history_cols")) m.history_cols.push_back({h.at(0), h.at(1), h.at(2)});
    m.period = doc.at("period").get<double>();
    return m;
  }
  throw Error(ErrorKind::kParse, "unknown mean type '" + type + "'");
}

json to_json(const GPModel& model) {
  json report = json::array();
  for (const auto& r : model.fit_report().restarts) {
    report.push_back({{"iterations", r.iterations},
                      {"evaluations", r.evaluations},
                      {"log_likelihood", r.log_likelihood},
                      {"reason", opt::to_string(r.reason)},
                      {"failed", r.failed}});
  }
  return {{"format", kGpFormat},
          {"kernel",
           {{"type", "matern52_ard"},
            {"lengthscales", vec(model.kernel().lengthscales)},
            {"signal_variance", model.kernel().signal_variance}}},
          {"noise_variance", model.noise_variance()},
          {"kernel_dims", model.kernel_dims()},
          {"standardizer", {{"shift", vec(model.standardizer().shift)}, {"scale", vec(model.standardizer().scale)}}},
          {"mean", mean_to_json(model.mean())},
          {"train_inputs", matrix_rows(model.train_inputs())},
          {"train_targets", vec(model.train_targets())},
          {"fit", {{"best", model.fit_report().best}, {"restarts", report}}}};
}

GPModel from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kGpFormat) {
      throw Error(ErrorKind::kParse, std::string("unsupported GP format, expected ") + kGpFormat);
    }
    const json& k = doc.at("kernel");
    MaternKernel kernel{to_vec(k.at("lengthscales")), k.at("signal_variance").get<double>()};
    Standardizer standardizer{to_vec(doc.at("standardizer").at("shift")), to_vec(doc.at("standardizer").at("scale"))};
    GPModel model = GPModel::condition(from_rows(doc.at("train_inputs")), to_vec(doc.at("train_targets")),
                                       doc.at("kernel_dims").get<int>(), std::move(kernel),
                                       doc.at("noise_variance").get<double>(), mean_from_json(doc.at("mean")),
                                       std::move(standardizer));
    FitReport report;
    report.best = doc.at("fit").at("best").get<int>();
    for (const auto& r : doc.at("fit").at("restarts")) {
      RestartReport entry;
      entry.iterations = r.at("iterations").get<int>();
      entry.evaluations = r.at("evaluations").get<int>();
      entry.log_likelihood = r.at("log_likelihood").get<double>();
      entry.failed = r.at("failed").get<bool>();
      const std::string reason = r.at("reason").get<std::string>();
      for (auto candidate : {opt::StopReason::kProjectedGradient, opt::StopReason::kObjectiveChange,
                             opt::StopReason::kMaxIterations, opt::StopReason::kLineSearchFailure}) {
        if (reason == opt::to_string(candidate)) entry.reason = candidate;
      }
      report.restarts.push_back(entry);
    }
    model.set_fit_report(std::move(report));
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("GP document: ") + e.what());
  }
}

void save_model(const GPModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << to_json(model).dump(1) << "\n";
}

GPModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path + ": " + e.what());
  }
  return from_json(doc);
}

}  // namespace cascadegp::gp
