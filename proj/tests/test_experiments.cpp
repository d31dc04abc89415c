#include "cascadegp/datasets.hpp"
#include "cascadegp/error.hpp"
#include "cascadegp/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace cascadegp;

namespace {

data::RawTrajectory arm_data(double duration, std::uint64_t seed) {
  data::SineExcitationSpec spec;
  spec.duration = duration;
  spec.seed = seed;
  return data::generate_sine_dataset(data::synthetic_arm(2), spec);
}

bench::CurveOptions quick() {
  bench::CurveOptions o;
  o.learner.gp.restarts = 1;
  o.learner.gp.max_iterations = 100;
  o.seed = 5;
  return o;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("learning curve shape, determinism and aggregation") {
  const auto parts = data::split(arm_data(24.0, 1), {2, 0.25});
  const std::vector<double> durations = {1.0, 2.5, 4.0};
  const auto variant = learn::variant_from_name("NP-Inward-Cascaded");
  const auto a = bench::learning_curve(variant, parts.subsets, durations, parts.test, nullptr, quick());
  const auto b = bench::learning_curve(variant, parts.subsets, durations, parts.test, nullptr, quick());
  REQUIRE(a.rows.size() == 2 * 3 * 2);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].nrmse == b.rows[i].nrmse);
    CHECK(a.rows[i].fit_iterations == b.rows[i].fit_iterations);
    CHECK(a.rows[i].nrmse >= 0.0);
    CHECK(a.rows[i].rows == std::lround(a.rows[i].duration_s * 10.0));
  }

  // Aggregates recomputed from the raw rows.
  std::map<std::pair<double, int>, std::vector<double>> groups;
  for (const auto& r : a.rows) groups[{r.duration_s, r.joint}].push_back(r.nrmse);
  const auto agg = a.aggregate();
  CHECK(agg.size() == groups.size());
  for (const auto& p : agg) {
    const auto& v = groups.at({p.duration_s, p.joint});
    const double mean = (v[0] + v[1]) / 2.0;
    CHECK(p.mean == doctest::Approx(mean));
    CHECK(p.stddev == doctest::Approx(std::abs(v[0] - v[1]) / std::sqrt(2.0)));
    CHECK(p.count == 2);
  }

  // [1, 2] holds only the 1 s point; [3, 4] only the 4 s point; [1.5, 2.5] the 2.5 s point.
  const auto summary = a.interval_summary({2.0, 4.0, 2.5});
  CHECK(summary.size() == 3 * 2);
  for (const auto& p : summary) {
    const double source = p.duration_s == 2.0 ? 1.0 : p.duration_s;
    CHECK(p.mean == doctest::Approx((groups.at({source, p.joint})[0] + groups.at({source, p.joint})[1]) / 2.0));
  }
}

TEST_CASE("semi-parametric curve on rigid-body data") {
  const auto chain = data::synthetic_arm(2);
  const auto parts = data::split(arm_data(20.0, 2), {1, 0.25});
  const auto table = bench::learning_curve(learn::variant_from_name("SP"), parts.subsets, {1.0, 3.0}, parts.test,
                                           &chain, quick());
  for (const auto& r : table.rows) CHECK(r.nrmse < 0.01);
}

TEST_CASE("learning curve argument checks") {
  const auto parts = data::split(arm_data(10.0, 3), {1, 0.2});
  const auto v = learn::variant_from_name("NP");
  CHECK_THROWS_AS(bench::learning_curve(v, parts.subsets, {20.0}, parts.test, nullptr, quick()), Error);
  CHECK_THROWS_AS(bench::learning_curve(v, parts.subsets, {3.0, 2.0}, parts.test, nullptr, quick()), Error);
  CHECK_THROWS_AS(bench::learning_curve(learn::variant_from_name("SP"), parts.subsets, {1.0}, parts.test, nullptr, quick()),
                  Error);
}

TEST_CASE("log duration grid") {
  const auto grid = bench::log_duration_grid(1.0, 60.0, 10);
  REQUIRE(grid.size() == 10);
  CHECK(grid.front() == 1.0);
  CHECK(grid.back() == 60.0);
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    CHECK(grid[i] / grid[i - 1] == doctest::Approx(grid[i + 1] / grid[i]));
  }
  CHECK_THROWS_AS(bench::log_duration_grid(0.0, 10.0), Error);
}

TEST_CASE("iterations report") {
  const auto traj = arm_data(10.0, 4);
  bench::IterationOptions o;
  o.n_points = 40;
  o.restarts = 2;
  const auto rows = bench::iterations_report({learn::variant_from_name("NP"), learn::variant_from_name("NP-Inward-Cascaded")},
                                             traj, nullptr, o);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].feature_dims == 6);
  CHECK(rows[2].feature_dims == 4);
  for (const auto& r : rows) {
    CHECK(r.mean_iterations > 0.0);
    CHECK(r.mean_evaluations >= r.mean_iterations);
    CHECK(r.restarts == 2);
  }

  o.n_points = 1;
  o.joints = {2};
  const auto single = bench::iterations_report({learn::variant_from_name("NP")}, traj, nullptr, o);
  REQUIRE(single.size() == 1);
  CHECK(single[0].mean_iterations <= 1000);

  o.n_points = 5000;
  CHECK_THROWS_AS(bench::iterations_report({learn::variant_from_name("NP")}, traj, nullptr, o), Error);
}

}
