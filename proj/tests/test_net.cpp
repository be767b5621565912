#include <doctest.h>

#include <cmath>
#include <sstream>

#include "reachrl/gradcheck.hpp"
#include "reachrl/net.hpp"
#include "test_util.hpp"

using namespace reachrl;

TEST_CASE("net init is deterministic with zero biases") {
  NetSpec spec{{4, 16, 3}};
  Rng a(42), b(42);
  Net n1(spec, a), n2(spec, b);
  CHECK(testutil::exact_eq(n1.params(), n2.params()));
  CHECK(n1.bias(0).isZero());
  CHECK(n1.bias(1).isZero());
}

TEST_CASE("net init weights stay inside the glorot bound") {
  NetSpec spec{{30, 40}};
  Rng rng(7);
  Net net(spec, rng);
  double limit = std::sqrt(6.0 / (30 + 40));
  auto w = net.weight(0);
  REQUIRE(w.size() == 1200);
  CHECK(w.minCoeff() >= -limit);
  CHECK(w.maxCoeff() <= limit);
  // spread should actually use the range
  CHECK(w.maxCoeff() > 0.5 * limit);
  CHECK(w.minCoeff() < -0.5 * limit);
}

TEST_CASE("forward with zero weights propagates only the output bias") {
  Net net = Net::zeros(NetSpec{{3, 8, 2}});
  net.bias(1)[0] = 1.5;
  net.bias(1)[1] = -0.5;
  VectorXd x(3);
  x << 0.3, -2.0, 7.0;
  VectorXd y = net.forward(x);
  CHECK(y[0] == doctest::Approx(1.5));
  CHECK(y[1] == doctest::Approx(-0.5));
}

TEST_CASE("single linear layer computes Wx + b") {
  Net net = Net::zeros(NetSpec{{2, 2}});
  net.weight(0) << 1.0, 3.0, 2.0, 4.0;
  net.bias(0) << 0.5, -0.5;
  VectorXd x(2);
  x << 1.0, 1.0;
  VectorXd y = net.forward(x);
  // weight is stored (in x out): y = x^T W + b
  CHECK(y[0] == doctest::Approx(1.0 + 2.0 + 0.5));
  CHECK(y[1] == doctest::Approx(3.0 + 4.0 - 0.5));
}

TEST_CASE("forward stays finite for wild inputs") {
  Rng rng(3);
  Net net(NetSpec{{5, 32, 32, 4}}, rng);
  for (int k = 0; k < 100; ++k) {
    VectorXd x(5);
    for (int i = 0; i < 5; ++i) x[i] = rng.uniform(-10.0, 10.0);
    CHECK(net.forward(x).allFinite());
  }
}

TEST_CASE("adam first step is the bias-corrected closed form") {
  VectorXd p(3);
  p << 1.0, 2.0, 3.0;
  VectorXd g(3);
  g << 0.5, -2.0, 1e-3;
  AdamState st = AdamState::for_params(3, 0.01);
  VectorXd before = p;
  adam_step(p, g, st);
  for (int i = 0; i < 3; ++i) {
    double expected = before[i] - 0.01 * g[i] / (std::abs(g[i]) + st.eps);
    CHECK(p[i] == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(st.step == 1);
}

TEST_CASE("adam ignores a zero gradient but counts the step") {
  VectorXd p(2);
  p << -1.0, 4.0;
  AdamState st = AdamState::for_params(2, 0.1);
  VectorXd zero = VectorXd::Zero(2);
  adam_step(p, zero, st);
  CHECK(p[0] == -1.0);
  CHECK(p[1] == 4.0);
  CHECK(st.step == 1);
}

TEST_CASE("adam drives a scalar quadratic to its minimum") {
  VectorXd theta(1);
  theta << 0.0;
  AdamState st = AdamState::for_params(1, 0.1);
  for (int i = 0; i < 200; ++i) {
    VectorXd g(1);
    g << 2.0 * (theta[0] - 3.0);
    adam_step(theta, g, st);
  }
  CHECK(std::abs(theta[0] - 3.0) < 0.1);
}

TEST_CASE("bce_with_logits hits the textbook values") {
  CHECK(bce_with_logits(0.0, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(bce_with_logits(0.0, 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(bce_with_logits(40.0, 0.0) == doctest::Approx(40.0).epsilon(1e-9));
  CHECK(std::isfinite(bce_with_logits(700.0, 0.0)));
  CHECK(std::isfinite(bce_with_logits(-700.0, 1.0)));
}

TEST_CASE("pca_2d recovers a line direction up to the sign convention") {
  Rng rng(11);
  MatrixXd pts(50, 2);
  for (int i = 0; i < 50; ++i) {
    double t = rng.uniform(-1.0, 1.0);
    pts(i, 0) = t;
    pts(i, 1) = 2.0 * t;
  }
  Pca2d pca = pca_2d(pts);
  CHECK(pca.component1[0] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-6));
  CHECK(pca.component1[1] == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-6));
}

TEST_CASE("pca_2d of 2-d data preserves pairwise distances") {
  Rng rng(13);
  MatrixXd pts(40, 2);
  for (int i = 0; i < 40; ++i) {
    pts(i, 0) = rng.normal();
    pts(i, 1) = rng.normal();
  }
  Pca2d pca = pca_2d(pts);
  for (int i = 0; i < 40; ++i)
    for (int j = i + 1; j < 40; ++j) {
      double orig = (pts.row(i) - pts.row(j)).norm();
      double proj = (pca.projections.row(i) - pca.projections.row(j)).norm();
      CHECK(orig == doctest::Approx(proj).epsilon(1e-6));
    }
}

TEST_CASE("pca_2d components are orthonormal and variance is bounded") {
  Rng rng(17);
  MatrixXd pts(100, 6);
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 6; ++j) pts(i, j) = rng.normal();
  Pca2d pca = pca_2d(pts);
  CHECK(std::abs(pca.component1.norm() - 1.0) < 1e-8);
  CHECK(std::abs(pca.component2.norm() - 1.0) < 1e-8);
  CHECK(std::abs(pca.component1.dot(pca.component2)) < 1e-8);

  MatrixXd centered = pts.rowwise() - pts.colwise().mean();
  double total_var = centered.squaredNorm();
  double proj_var = pca.projections.squaredNorm();
  CHECK(proj_var <= total_var + 1e-9);
}

TEST_CASE("pca_2d rejects degenerate input") {
  MatrixXd two(2, 3);
  two.setZero();
  CHECK_THROWS_AS(pca_2d(two), std::invalid_argument);
}

TEST_CASE("net checkpoints round-trip exactly") {
  Rng rng(23);
  Net net(NetSpec{{3, 8, 2}}, rng);
  std::stringstream ss;
  save_net(ss, net);
  Net back = load_net(ss);
  CHECK(back.spec() == net.spec());
  CHECK(testutil::exact_eq(back.params(), net.params()));
}

TEST_CASE("corrupted checkpoints are rejected") {
  std::stringstream ss("not-a-checkpoint\n1 2 3\n");
  CHECK_THROWS(load_net(ss));
}

TEST_CASE("analytic gradients match finite differences everywhere") {
  for (const auto& r : run_gradient_checks(5, 99)) {
    INFO(r.family);
    CHECK(r.max_rel_err < 1e-4);
  }
}
