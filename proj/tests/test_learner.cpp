#include "cascadegp/datasets.hpp"
#include "cascadegp/error.hpp"
#include "cascadegp/learner.hpp"
#include "cascadegp/metrics.hpp"
#include "cascadegp/model_io.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

using namespace cascadegp;

namespace {

data::RawTrajectory arm_data(int dof, double duration, std::uint64_t seed) {
  data::SineExcitationSpec spec;
  spec.duration = duration;
  spec.seed = seed;
  return data::generate_sine_dataset(data::synthetic_arm(dof), spec);
}

learn::LearnerConfig quick_config() {
  learn::LearnerConfig c;
  c.gp.restarts = 1;
  c.gp.max_iterations = 200;
  return c;
}

}  // namespace

TEST_SUITE("learner") {

TEST_CASE("variant names") {
  const auto all = learn::all_variants();
  CHECK(all.size() == 12);
  std::set<std::string> names;
  for (const auto& v : all) {
    names.insert(v.name());
    const auto back = learn::variant_from_name(v.name());
    CHECK(back.name() == v.name());
    CHECK(back.scheme == v.scheme);
  }
  CHECK(names.size() == 12);
  CHECK(names.count("NP"));
  CHECK(names.count("SP-Inward-Cascaded"));
  CHECK(names.count("NP-Outward-Cascaded-DF"));
  CHECK_THROWS_AS(learn::variant_from_name("XP-Inward"), Error);
  CHECK(learn::cascade_order(feat::Scheme::kInwardCascade, 3) == std::vector<int>{3, 2, 1});
  CHECK(learn::cascade_order(feat::Scheme::kOutwardCascade, 3) == std::vector<int>{1, 2, 3});
}

TEST_CASE("semi-parametric model on rigid-body data") {
  const auto chain = data::synthetic_arm(3);
  const auto traj = arm_data(3, 10.0, 1);
  const auto model = learn::train(learn::variant_from_name("SP-Inward-Cascaded"),
                                  learn::TrainingSet::from_trajectory(traj, 0), &chain, quick_config());
  CHECK(model.joint_models()[0].kernel_dims() == 4);
  CHECK(model.joint_models()[2].kernel_dims() == 9);
  const auto test = data::to_samples(arm_data(3, 5.0, 2));
  for (const auto& s : test) CHECK((model.predict(s) - s.tau).cwiseAbs().maxCoeff() < 1e-6);
  CHECK_THROWS_AS(learn::train(learn::variant_from_name("SP"), learn::TrainingSet::from_trajectory(traj, 0), nullptr,
                               quick_config()),
                  Error);
  CHECK(learn::residual_targets(chain, learn::TrainingSet::from_trajectory(traj, 0), 2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("inward prediction chains predicted torques") {
  const auto traj = arm_data(3, 8.0, 3);
  const auto variant = learn::variant_from_name("NP-Inward-Cascaded");
  const auto model = learn::train(variant, learn::TrainingSet::from_trajectory(traj, 0), nullptr, quick_config());
  const feat::Sample s = data::to_samples(arm_data(3, 2.0, 9))[7];
  const Eigen::VectorXd out = model.predict(s);
  const auto& gps = model.joint_models();
  const double t3 = gps[2].predict_mean(learn::joint_input(variant, 3, s, std::nullopt, learn::DfMeanSource::kFiniteDifference));
  const double t2 = gps[1].predict_mean(learn::joint_input(variant, 2, s, t3, learn::DfMeanSource::kFiniteDifference));
  const double t1 = gps[0].predict_mean(learn::joint_input(variant, 1, s, t2, learn::DfMeanSource::kFiniteDifference));
  CHECK(out[2] == t3);
  CHECK(out[1] == t2);
  CHECK(out[0] == t1);
}

TEST_CASE("training ignores sample order and caps the point count") {
  const auto traj = arm_data(2, 30.0, 4);
  auto set = learn::TrainingSet::from_trajectory(traj, 0);
  learn::LearnerConfig cfg = quick_config();
  cfg.max_points = 60;
  const auto variant = learn::variant_from_name("NP-Outward-Cascaded");
  const auto a = learn::train(variant, set, nullptr, cfg);
  std::mt19937_64 rng(1);
  std::shuffle(set.samples.begin(), set.samples.end(), rng);
  const auto b = learn::train(variant, set, nullptr, cfg);
  CHECK(a.joint_models()[0].size() == 60);
  const auto s = data::to_samples(arm_data(2, 1.0, 8))[3];
  CHECK(a.predict(s) == b.predict(s));
}

TEST_CASE("irregular timestamps are rejected") {
  auto traj = arm_data(2, 3.0, 5);
  auto set = learn::TrainingSet::from_trajectory(traj, 0);
  set.samples[10].t += 0.03;
  CHECK_THROWS_AS(set.validate(), Error);
  CHECK_THROWS_AS(learn::train(learn::variant_from_name("NP"), set, nullptr, quick_config()), Error);
}

TEST_CASE("derivative-free variants") {
  const auto chain = data::synthetic_arm(3);
  const auto traj = arm_data(3, 15.0, 6);
  const auto np = learn::variant_from_name("NP-Inward-Cascaded-DF");
  const auto sp = learn::variant_from_name("SP-DF");
  const auto m_np = learn::train(np, learn::TrainingSet::from_trajectory(traj, 2), nullptr, quick_config());
  CHECK(m_np.joint_models()[0].size() == 148);
  CHECK(m_np.joint_models()[0].kernel_dims() == 4);

  const auto m_sp = learn::train(sp, learn::TrainingSet::from_trajectory(traj, 2), &chain, quick_config());
  const auto test = data::to_samples(arm_data(3, 6.0, 7), 2);
  CHECK(!m_sp.accepts(test[1]));
  CHECK_THROWS_AS(m_sp.predict(test[1]), Error);
  const auto usable = learn::usable_samples(sp, test);
  CHECK(usable.size() == test.size() - 2);
  Eigen::MatrixXd truth(3, static_cast<Eigen::Index>(usable.size()));
  for (std::size_t i = 0; i < usable.size(); ++i) truth.col(static_cast<Eigen::Index>(i)) = usable[i].tau;
  const Eigen::MatrixXd pred = learn::predict_trajectory(m_sp, usable);
  // finite-difference mean at 10 Hz carries truncation error
  for (int j = 0; j < 3; ++j) CHECK(bench::nrmse(pred.row(j).transpose(), truth.row(j).transpose()) < 0.2);

  learn::LearnerConfig cols = quick_config();
  cols.df_mean = learn::DfMeanSource::kDatasetColumns;
  const auto exact = learn::train(sp, learn::TrainingSet::from_trajectory(traj, 2), &chain, cols);
  for (const auto& s : usable) CHECK((exact.predict(s) - s.tau).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("bundles round trip") {
  const auto chain = data::synthetic_arm(3);
  const auto traj = arm_data(3, 6.0, 8);
  for (const char* name : {"SP-Outward-Cascaded", "NP-Inward-Cascaded-DF"}) {
    const auto variant = learn::variant_from_name(name);
    const auto model =
        learn::train(variant, learn::TrainingSet::from_trajectory(traj, 2), &chain, quick_config());
    const auto dir = std::filesystem::temp_directory_path() / (std::string("cascadegp_bundle_") + name);
    learn::save_bundle(model, dir.string(), {"abc", 42});
    const auto loaded = learn::load_bundle(dir.string());
    CHECK(loaded.info.dataset_fingerprint == "abc");
    CHECK(loaded.info.seed == 42);
    CHECK(loaded.model.variant().name() == name);
    const auto samples = data::to_samples(arm_data(3, 2.0, 1), 2);
    CHECK(loaded.model.predict(samples[5]) == model.predict(samples[5]));
    std::filesystem::remove_all(dir);
  }
  CHECK_THROWS_AS(learn::load_bundle("/nonexistent/bundle"), Error);
}

}
