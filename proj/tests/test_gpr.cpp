#include "cascadegp/error.hpp"
#include "cascadegp/gp_io.hpp"
#include "cascadegp/gpr.hpp"
#include "cascadegp/optimizer.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cascadegp;

namespace {

// Matern 5/2 written out independently of the library.
double matern(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& l, double s2) {
  const double r = ((a - b).array() / l.array()).matrix().norm();
  return s2 * (1.0 + std::sqrt(5.0) * r + 5.0 * r * r / 3.0) * std::exp(-std::sqrt(5.0) * r);
}

double dense_lml(const Eigen::MatrixXd& x, const Eigen::VectorXd& r, const Eigen::VectorXd& l, double s2, double sn2) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = matern(x.row(i), x.row(j), l, s2) + (i == j ? sn2 : 0.0);
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  return -0.5 * r.dot(lu.solve(r)) - 0.5 * std::log(k.determinant()) - 0.5 * n * std::log(2.0 * M_PI);
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = d(rng);
  }
  return m;
}

}  // namespace

TEST_SUITE("gpr") {

TEST_CASE("matern 5/2 value at unit distance") {
  gp::MaternKernel k{Eigen::VectorXd::Ones(1), 1.0};
  CHECK(gp::kernel_eval(k, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)) == doctest::Approx(0.52399).epsilon(1e-5));
  CHECK(gp::kernel_eval(k, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)) == 1.0);
  gp::MaternKernel ard{Eigen::Vector2d(0.5, 3.0), 2.5};
  const Eigen::Vector2d a(0.1, -0.4), b(0.7, 1.3);
  CHECK(gp::kernel_eval(ard, a, b) == doctest::Approx(matern(a, b, ard.lengthscales, 2.5)).epsilon(1e-14));
}

TEST_CASE("single point log marginal likelihood") {
  const double s2 = 1.5, sn2 = 0.25, y = 0.8;
  const auto r = gp::log_marginal_likelihood(Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Constant(1, y),
                                             {Eigen::VectorXd::Ones(2), s2}, sn2, gp::ZeroMean{});
  const double k = s2 + sn2;
  CHECK(r.value == doctest::Approx(-0.5 * y * y / k - 0.5 * std::log(k) - 0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
  // d/d log s2 = 0.5 (y^2 / k^2 - 1 / k) s2; lengthscales do not matter for one point.
  CHECK(r.gradient[2] == doctest::Approx(0.5 * (y * y / (k * k) - 1.0 / k) * s2).epsilon(1e-12));
  CHECK(r.gradient[0] == doctest::Approx(0.0));
}

TEST_CASE("log marginal likelihood matches a dense computation") {
  std::mt19937_64 rng(21);
  const Eigen::MatrixXd x = random_matrix(rng, 20, 3, -2, 2);
  const Eigen::VectorXd y = random_matrix(rng, 20, 1, -1, 1);
  const Eigen::Vector3d l(0.7, 1.4, 2.0);
  const gp::MeanFunction mean = gp::ConstantMean{0.3};
  const auto r = gp::log_marginal_likelihood(x, y, {l, 1.2}, 0.05, mean);
  CHECK(r.value == doctest::Approx(dense_lml(x, y.array() - 0.3, l, 1.2, 0.05)).epsilon(1e-10));
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 2 + trial % 3;
    const Eigen::MatrixXd x = random_matrix(rng, 20, d, -1, 1);
    const Eigen::VectorXd y = random_matrix(rng, 20, 1, -2, 2);
    Eigen::VectorXd theta = random_matrix(rng, d + 2, 1, -1, 0.5);
    auto lml = [&](const Eigen::VectorXd& t) {
      gp::MaternKernel k{t.head(d).array().exp(), std::exp(t[d])};
      return gp::log_marginal_likelihood(x, y, k, std::exp(t[d + 1]), gp::ZeroMean{});
    };
    const Eigen::VectorXd g = lml(theta).gradient;
    for (int i = 0; i < d + 2; ++i) {
      const double h = 1e-5;
      Eigen::VectorXd up = theta, down = theta;
      up[i] += h;
      down[i] -= h;
      const double fd = (lml(up).value - lml(down).value) / (2.0 * h);
      CHECK(std::abs(fd - g[i]) / std::max(1.0, std::abs(fd)) < 1e-4);
    }
  }
}

TEST_CASE("noise-free posterior interpolates") {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd x = random_matrix(rng, 15, 2, -3, 3);
  Eigen::VectorXd y(15);
  for (int i = 0; i < 15; ++i) y[i] = std::sin(x(i, 0)) + 0.5 * x(i, 1);
  const auto model = gp::GPModel::condition(x, y, 2, {Eigen::Vector2d(0.8, 0.8), 1.0}, 0.0, gp::ZeroMean{},
                                            gp::Standardizer::identity(2));
  for (int i = 0; i < 15; ++i) {
    CHECK(std::abs(model.predict_mean(x.row(i).transpose()) - y[i]) < 1e-6);
    CHECK(model.predict(x.row(i).transpose()).variance < 1e-6);
  }
}

TEST_CASE("far from the data the prediction returns to the mean") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = random_matrix(rng, 10, 2, -1, 1);
  const Eigen::VectorXd y = random_matrix(rng, 10, 1, -3, 3);
  const gp::MeanFunction mean = gp::FunctionMean{[](const Eigen::VectorXd& v) { return 2.0 * v[0] - v[1]; }, "plane"};
  const double s2 = 4.0;
  const auto model = gp::GPModel::condition(x, y, 2, {Eigen::Vector2d(0.3, 0.3), s2}, 0.01, mean,
                                            gp::Standardizer::identity(2));
  const Eigen::Vector2d far(1.0 + 10 * 0.3 + 0.5, -8.0);
  CHECK(std::abs(model.predict_mean(far) - mean(far)) < 1e-6 * std::sqrt(s2));
  CHECK(model.predict(far).variance == doctest::Approx(s2 + 0.01).epsilon(1e-6));
}

TEST_CASE("passive columns reach the mean but not the kernel") {
  Eigen::MatrixXd x(3, 2);
  x << 0.0, 10.0, 1.0, 20.0, 2.0, 30.0;
  const Eigen::VectorXd y = Eigen::Vector3d(10.0, 20.0, 30.0);
  const gp::MeanFunction mean = gp::FunctionMean{[](const Eigen::VectorXd& v) { return v[1]; }, "col1"};
  const auto model =
      gp::GPModel::condition(x, y, 1, {Eigen::VectorXd::Ones(1), 1.0}, 1e-4, mean, gp::Standardizer::identity(1));
  CHECK(model.alpha().norm() < 1e-12);
  CHECK(model.predict_mean(Eigen::Vector2d(0.5, 7.0)) == doctest::Approx(7.0));
}

TEST_CASE("fit is deterministic and learns a smooth function") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd x = random_matrix(rng, 60, 2, -2, 2);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) y[i] = std::sin(2.0 * x(i, 0)) * std::cos(x(i, 1));
  gp::OptConfig cfg;
  cfg.restarts = 3;
  cfg.rng_seed = 17;
  const auto a = gp::fit(x, y, gp::ZeroMean{}, cfg);
  const auto b = gp::fit(x, y, gp::ZeroMean{}, cfg);
  CHECK(a.kernel().lengthscales == b.kernel().lengthscales);
  CHECK(a.noise_variance() == b.noise_variance());
  CHECK(a.fit_report().restarts.size() == 3);
  CHECK(a.fit_report().mean_iterations() > 0.0);
  const Eigen::Vector2d probe(0.3, -0.5);
  CHECK(a.predict_mean(probe) == doctest::Approx(std::sin(0.6) * std::cos(-0.5)).epsilon(0.05));

  cfg.ard = false;
  const auto iso = gp::fit(x, y, gp::ZeroMean{}, cfg);
  CHECK(iso.kernel().lengthscales[0] == iso.kernel().lengthscales[1]);
}

TEST_CASE("degenerate inputs") {
  gp::OptConfig cfg;
  cfg.restarts = 2;
  const auto one = gp::fit(Eigen::MatrixXd::Ones(1, 3), Eigen::VectorXd::Constant(1, 2.0), gp::ZeroMean{}, cfg);
  CHECK(one.fit_report().mean_iterations() <= cfg.max_iterations);
  CHECK(std::isfinite(one.predict_mean(Eigen::VectorXd::Zero(3))));

  CHECK_THROWS_AS(gp::fit(Eigen::MatrixXd::Zero(0, 2), Eigen::VectorXd::Zero(0), gp::ZeroMean{}, cfg), Error);
  CHECK_THROWS_AS(gp::fit(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(2), gp::ZeroMean{}, cfg), Error);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 2);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(gp::fit(bad, Eigen::VectorXd::Zero(3), gp::ZeroMean{}, cfg), Error);

  // Duplicate inputs with no noise still factorize thanks to jitter.
  const auto dup = gp::GPModel::condition(Eigen::MatrixXd::Ones(4, 1), Eigen::VectorXd::Ones(4), 1,
                                          {Eigen::VectorXd::Ones(1), 1.0}, 0.0, gp::ZeroMean{},
                                          gp::Standardizer::identity(1));
  CHECK(dup.jitter() > 0.0);
}

TEST_CASE("models survive a JSON round trip") {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd x = random_matrix(rng, 25, 3, -1, 1);
  const Eigen::VectorXd y = random_matrix(rng, 25, 1, -1, 1);
  gp::OptConfig cfg;
  cfg.restarts = 2;
  const auto model = gp::fit(x, y, gp::ConstantMean{0.2}, cfg);
  const auto back = gp::from_json(gp::to_json(model));
  const Eigen::Vector3d probe(0.1, 0.2, -0.3);
  CHECK(back.predict_mean(probe) == model.predict_mean(probe));
  CHECK(back.fit_report().restarts.size() == 2);
  const gp::MeanFunction f = gp::FunctionMean{[](const Eigen::VectorXd&) { return 0.0; }, "f"};
  CHECK_THROWS_AS(gp::mean_to_json(f), Error);
}

}

TEST_SUITE("optimizer") {

TEST_CASE("rosenbrock inside the box") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  opt::BoxOptions o;
  o.objective_change_tol = 0.0;
  const auto r = opt::minimize_box(f, Eigen::Vector2d(-1.2, 1.0), o);
  CHECK(r.reason == opt::StopReason::kProjectedGradient);
  CHECK((r.x - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-4);
  CHECK(r.evaluations >= r.iterations);
}

TEST_CASE("active bounds") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * (x - Eigen::Vector2d(20.0, -0.5));
    return (x - Eigen::Vector2d(20.0, -0.5)).squaredNorm();
  };
  const auto r = opt::minimize_box(f, Eigen::Vector2d::Zero(), {});
  CHECK(r.x[0] == 10.0);
  CHECK(r.x[1] == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(opt::projected_gradient_norm(r.x, r.gradient, -10.0, 10.0) < 1e-5);
}

TEST_CASE("iteration cap and relative change stop") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 4.0 * x.array().cube().matrix();
    return x.array().pow(4).sum();
  };
  opt::BoxOptions o;
  o.max_iterations = 3;
  CHECK(opt::minimize_box(f, Eigen::Vector3d(1, 2, 3), o).reason == opt::StopReason::kMaxIterations);
  o.max_iterations = 1000;
  const auto r = opt::minimize_box(f, Eigen::Vector3d(1, 2, 3), o);
  CHECK(r.iterations < 1000);
  CHECK(r.x.norm() < 0.1);
}

}
