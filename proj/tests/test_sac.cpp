#include <doctest.h>

#include <cmath>
#include <sstream>

#include "reachrl/sac.hpp"
#include "test_util.hpp"

using namespace reachrl;
using testutil::exact_eq;

namespace {

SAC make_sac(int obs = 2, int goal = 2, int action = 2, int hidden = 16,
             std::uint64_t seed = 1) {
  SACConfig cfg;
  cfg.obs_dim = obs;
  cfg.goal_dim = goal;
  cfg.action_dim = action;
  cfg.hidden = hidden;
  Rng rng(seed);
  return SAC::init(cfg, rng);
}

void force_min_std(SAC& sac) {
  // push the log-std head far below the clamp
  int last = sac.actor.spec().num_layers() - 1;
  auto w = sac.actor.weight(last);
  auto b = sac.actor.bias(last);
  for (int d = sac.cfg.action_dim; d < 2 * sac.cfg.action_dim; ++d) {
    w.col(d).setZero();
    b[d] = -100.0;
  }
}

std::vector<Transition> bandit_batch(int n, Rng& rng) {
  std::vector<Transition> out(n);
  for (auto& t : out) {
    t.s = VectorXd::Zero(2);
    t.g = VectorXd::Zero(2);
    t.a = VectorXd::Zero(2);
    t.a[0] = rng.uniform(-1, 1);
    t.a[1] = rng.uniform(-1, 1);
    t.r = rng.uniform(-1, 0);
    t.s2 = VectorXd::Zero(2);
    t.done = rng.uniform() < 0.5;
  }
  return out;
}

std::vector<const Transition*> ptrs(const std::vector<Transition>& ts) {
  std::vector<const Transition*> out;
  for (const auto& t : ts) out.push_back(&t);
  return out;
}

}  // namespace

TEST_CASE("replay buffer overwrites the oldest entry at capacity") {
  ReplayBuffer buf(5);
  Rng rng(1);
  for (int i = 0; i < 6; ++i) {
    Transition t;
    t.s = VectorXd::Constant(1, static_cast<double>(i));
    t.g = t.s;
    t.a = t.s;
    t.s2 = t.s;
    buf.push(t);
  }
  CHECK(buf.size() == 5);
  // entry 0 was overwritten by 5
  bool has0 = false, has5 = false;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    has0 = has0 || buf.at(i).s[0] == 0.0;
    has5 = has5 || buf.at(i).s[0] == 5.0;
  }
  CHECK_FALSE(has0);
  CHECK(has5);
}

TEST_CASE("replay sampling is deterministic and rejects short buffers") {
  ReplayBuffer buf(100);
  Rng fill(2);
  for (const auto& t : bandit_batch(50, fill)) buf.push(t);
  Rng r1(9), r2(9);
  auto b1 = buf.sample(16, r1);
  auto b2 = buf.sample(16, r2);
  for (int i = 0; i < 16; ++i) CHECK(b1[i] == b2[i]);
  Rng r3(1);
  CHECK_THROWS_AS(buf.sample(51, r3), std::runtime_error);
}

TEST_CASE("replay sampling is uniform over the buffer") {
  ReplayBuffer buf(100);
  Rng fill(3);
  for (const auto& t : bandit_batch(100, fill)) buf.push(t);
  Rng rng(4);
  std::vector<int> counts(100, 0);
  int draws = 100000;
  for (int i = 0; i < draws / 10; ++i) {
    for (const Transition* t : buf.sample(10, rng)) {
      counts[t - &buf.at(0)] += 1;
    }
  }
  double sigma = std::sqrt(draws * 0.01 * 0.99);
  for (int i = 0; i < 100; ++i)
    CHECK(std::abs(counts[i] - draws / 100.0) <= 3.5 * sigma);
}

TEST_CASE("actions stay inside the open unit box") {
  SAC sac = make_sac();
  Rng rng(5);
  VectorXd s = VectorXd::Zero(2), g = VectorXd::Ones(2);
  for (int i = 0; i < 100000; ++i) {
    auto [a, logp] = actor_sample(sac, s, g, rng);
    CHECK(a[0] > -1.0);
    CHECK(a[0] < 1.0);
    CHECK(a[1] > -1.0);
    CHECK(a[1] < 1.0);
    CHECK(std::isfinite(logp));
  }
}

TEST_CASE("with minimal std the sample collapses to the squashed mean") {
  SAC sac = make_sac();
  force_min_std(sac);
  Rng rng(6);
  VectorXd s = VectorXd::Constant(2, 0.3), g = VectorXd::Constant(2, 0.7);
  VectorXd mean_action = actor_mean(sac, s, g);
  for (int i = 0; i < 100; ++i) {
    auto [a, logp] = actor_sample(sac, s, g, rng);
    CHECK(std::abs(a[0] - mean_action[0]) < 0.05);
    CHECK(std::abs(a[1] - mean_action[1]) < 0.05);
  }
}

TEST_CASE("actor_mean is deterministic and matches the batch path") {
  SAC sac = make_sac();
  VectorXd s = VectorXd::Constant(2, 0.2), g = VectorXd::Constant(2, 0.9);
  VectorXd a1 = actor_mean(sac, s, g);
  VectorXd a2 = actor_mean(sac, s, g);
  CHECK(exact_eq(a1, a2));
  MatrixXd sg(1, 4);
  sg << s.transpose(), g.transpose();
  CHECK(exact_eq(actor_mean_batch(sac, sg).row(0).transpose(), a1));
}

TEST_CASE("log_prob matches a numerical CDF derivative for scalar actions") {
  SAC sac = make_sac(1, 1, 1, 16, 7);
  Rng rng(8);
  VectorXd s = VectorXd::Constant(1, 0.4), g = VectorXd::Constant(1, -0.2);
  MatrixXd sg(1, 2);
  sg << s.transpose(), g.transpose();
  MatrixXd raw = sac.actor.forward_batch(sg);
  double mean = raw(0, 0);
  double logstd = std::clamp(raw(0, 1), -5.0, 2.0);
  double std_ = std::exp(logstd);

  auto cdf = [&](double a) {
    // P(tanh(u) <= a) with u ~ N(mean, std)
    double z = (std::atanh(a) - mean) / std_;
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
  };

  for (int i = 0; i < 200; ++i) {
    auto [a, logp] = actor_sample(sac, s, g, rng);
    double h = 1e-6;
    double density = (cdf(a[0] + h) - cdf(a[0] - h)) / (2.0 * h);
    REQUIRE(density > 0.0);
    CHECK(logp == doctest::Approx(std::log(density)).epsilon(1e-3));
  }
}

TEST_CASE("terminal transitions with zero reward give zero targets") {
  SAC sac = make_sac();
  Rng rng(10);
  std::vector<Transition> ts = bandit_batch(8, rng);
  for (auto& t : ts) {
    t.done = true;
    t.r = 0.0;
  }
  MatrixXd noise(8, 2);
  for (int i = 0; i < 8; ++i)
    for (int d = 0; d < 2; ++d) noise(i, d) = rng.normal();
  VectorXd y = critic_targets(sac, ptrs(ts), noise);
  for (int i = 0; i < 8; ++i) CHECK(y[i] == 0.0);
}

TEST_CASE("with zero temperature and minimal std targets drop the entropy term") {
  SAC sac = make_sac();
  force_min_std(sac);
  sac.log_temp = -std::numeric_limits<double>::infinity();  // alpha = 0
  Rng rng(11);
  std::vector<Transition> ts = bandit_batch(16, rng);
  for (auto& t : ts) t.done = false;
  MatrixXd noise = MatrixXd::Zero(16, 2);
  VectorXd y = critic_targets(sac, ptrs(ts), noise);

  // manual twin-critic regression target without any log-pi term
  for (int i = 0; i < 16; ++i) {
    MatrixXd sg(1, 4);
    sg << ts[i].s2.transpose(), ts[i].g.transpose();
    VectorXd a2 = actor_mean(sac, ts[i].s2, ts[i].g);  // noise 0, std ~ 0
    MatrixXd sga(1, 6);
    sga << sg, a2.transpose();
    double q1 = sac.target1.forward_batch(sga)(0, 0);
    double q2 = sac.target2.forward_batch(sga)(0, 0);
    double expected = ts[i].r + sac.cfg.gamma * std::min(q1, q2);
    CHECK(y[i] == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("temperature stays positive through updates") {
  SAC sac = make_sac();
  Rng rng(12);
  auto ts = bandit_batch(300, rng);
  for (const auto& t : ts) sac.replay.push(t);
  for (int i = 0; i < 50; ++i) {
    auto batch = sac.replay.sample(32, rng);
    SACUpdateStats stats = sac_update(sac, batch, rng);
    CHECK(stats.alpha > 0.0);
    CHECK(std::exp(sac.log_temp) > 0.0);
  }
}

TEST_CASE("polyak averaging contracts the target gap when critics are frozen") {
  SAC sac = make_sac();
  // make targets differ from critics first
  Rng rng(13);
  auto ts = bandit_batch(300, rng);
  for (const auto& t : ts) sac.replay.push(t);
  for (int i = 0; i < 10; ++i)
    sac_update(sac, sac.replay.sample(32, rng), rng);

  // freeze everything by zeroing the learning rates
  sac.adam_critic1.lr = 0.0;
  sac.adam_critic2.lr = 0.0;
  sac.adam_actor.lr = 0.0;
  sac.adam_temp.lr = 0.0;
  double gap_before = (sac.target1.params() - sac.critic1.params()).norm();
  sac_update(sac, sac.replay.sample(32, rng), rng);
  double gap_after = (sac.target1.params() - sac.critic1.params()).norm();
  CHECK(gap_after == doctest::Approx(sac.cfg.polyak * gap_before).epsilon(1e-9));
}

TEST_CASE("sac_update rejects trivial batches") {
  SAC sac = make_sac();
  Rng rng(14);
  auto ts = bandit_batch(1, rng);
  CHECK_THROWS_AS(sac_update(sac, ptrs(ts), rng), std::invalid_argument);
}

TEST_CASE("policy checkpoints round-trip") {
  SAC sac = make_sac();
  sac.log_temp = -0.731;
  std::stringstream ss;
  save_policy(ss, sac);
  SAC back = load_policy(ss, sac.cfg);
  CHECK(back.log_temp == sac.log_temp);
  CHECK(exact_eq(back.actor.params(), sac.actor.params()));
  CHECK(exact_eq(back.critic1.params(), sac.critic1.params()));
  CHECK(exact_eq(back.critic2.params(), sac.critic2.params()));
  CHECK(exact_eq(back.target1.params(), sac.target1.params()));
  CHECK(exact_eq(back.target2.params(), sac.target2.params()));
}

TEST_CASE("incompatible checkpoints are rejected") {
  SAC sac = make_sac();
  std::stringstream ss;
  save_policy(ss, sac);
  SACConfig other = sac.cfg;
  other.obs_dim = 5;
  CHECK_THROWS_AS(load_policy(ss, other), std::runtime_error);
}
