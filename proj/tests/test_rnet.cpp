#include <doctest.h>

#include <cmath>
#include <sstream>

#include "reachrl/env.hpp"
#include "reachrl/rnet.hpp"
#include "test_util.hpp"

using namespace reachrl;
using testutil::exact_eq;

namespace {

// random-walk style trajectories over 2-d points
TrajectoryBuffer random_buffer(int n_traj, int len, Rng& rng,
                               std::size_t capacity = 200000) {
  TrajectoryBuffer buffer(capacity);
  for (int k = 0; k < n_traj; ++k) {
    std::vector<Obs> states;
    double x = rng.uniform(), y = rng.uniform();
    for (int i = 0; i < len; ++i) {
      x += rng.uniform(-0.02, 0.02);
      y += rng.uniform(-0.02, 0.02);
      states.push_back(testutil::obs2(x, y));
    }
    buffer.add(std::move(states));
  }
  return buffer;
}

const Trajectory* find_traj(const TrajectoryBuffer& buffer, long id) {
  for (std::size_t k = 0; k < buffer.num_trajectories(); ++k)
    if (buffer.trajectory(k).id == id) return &buffer.trajectory(k);
  return nullptr;
}

}  // namespace

TEST_CASE("reachability label follows the pairwise rule") {
  CHECK(reachability_label(7, 7, 3, 5, 3) == 1);
  CHECK(reachability_label(7, 8, 3, 3, 3) == 0);
  CHECK(reachability_label(7, 7, 1, 10, 3) == 0);
  CHECK(reachability_label(7, 7, 4, 4, 3) == 1);
  CHECK(reachability_label(7, 7, 0, 3, 3) == 1);
  CHECK(reachability_label(7, 7, 0, 4, 3) == 0);
}

TEST_CASE("label agrees with a direct transcription on all pairs") {
  Rng rng(51);
  for (int rep = 0; rep < 20; ++rep) {
    int n_traj = 1 + rng.uniform_int(5);
    TrajectoryBuffer buffer(100000);
    std::vector<int> lens;
    for (int k = 0; k < n_traj; ++k) {
      int len = 1 + rng.uniform_int(30);
      lens.push_back(len);
      std::vector<Obs> states(len, testutil::obs2(0, 0));
      buffer.add(std::move(states));
    }
    int tau = 1 + rng.uniform_int(6);
    for (std::size_t a = 0; a < buffer.num_trajectories(); ++a) {
      for (std::size_t b = 0; b < buffer.num_trajectories(); ++b) {
        const auto& ta = buffer.trajectory(a);
        const auto& tb = buffer.trajectory(b);
        for (int i = 0; i < static_cast<int>(ta.states.size()); ++i) {
          for (int j = 0; j < static_cast<int>(tb.states.size()); ++j) {
            int direct = (ta.id == tb.id && std::abs(i - j) <= tau) ? 1 : 0;
            CHECK(reachability_label(ta.id, tb.id, i, j, tau) == direct);
          }
        }
      }
    }
  }
}

TEST_CASE("sample_pairs balances classes exactly") {
  Rng rng(52);
  TrajectoryBuffer buffer = random_buffer(4, 40, rng);
  for (int batch_size : {2, 7, 64, 256}) {
    Rng draw(99);
    PairBatch batch = sample_pairs(buffer, batch_size, draw, 5);
    int positives = 0;
    for (Eigen::Index i = 0; i < batch.labels.size(); ++i)
      positives += batch.labels[i] > 0.5;
    CHECK(positives == (batch_size + 1) / 2);
    CHECK(batch.labels.size() == batch_size);
  }
}

TEST_CASE("sample_pairs labels and rows match the stored trajectories") {
  Rng rng(53);
  TrajectoryBuffer buffer = random_buffer(3, 30, rng);
  Rng draw(1);
  PairBatch batch = sample_pairs(buffer, 128, draw, 5);
  for (int r = 0; r < 128; ++r) {
    auto [a, b, i, j] = batch.source[r];
    CHECK(batch.labels[r] ==
          reachability_label(a, b, static_cast<int>(i), static_cast<int>(j), 5));
    const Trajectory* ta = find_traj(buffer, a);
    const Trajectory* tb = find_traj(buffer, b);
    REQUIRE(ta);
    REQUIRE(tb);
    CHECK(exact_eq(batch.lhs.row(r).transpose(), ta->states[i]));
    CHECK(exact_eq(batch.rhs.row(r).transpose(), tb->states[j]));
    // negatives from one trajectory keep the don't-care margin
    if (a == b && batch.labels[r] < 0.5) CHECK(std::abs(i - j) > 10);
  }
}

TEST_CASE("sample_pairs is deterministic per seed") {
  Rng rng(54);
  TrajectoryBuffer buffer = random_buffer(3, 30, rng);
  Rng d1(7), d2(7);
  PairBatch b1 = sample_pairs(buffer, 64, d1, 5);
  PairBatch b2 = sample_pairs(buffer, 64, d2, 5);
  CHECK(b1.source == b2.source);
}

TEST_CASE("sample_pairs rejects a buffer that is too small") {
  TrajectoryBuffer tiny(1000);
  tiny.add({testutil::obs2(0, 0), testutil::obs2(0, 1)});
  Rng rng(1);
  CHECK_THROWS_AS(sample_pairs(tiny, 8, rng, 5), std::runtime_error);
}

TEST_CASE("trajectory buffer evicts whole trajectories FIFO") {
  TrajectoryBuffer buffer(25);
  long id0 = buffer.add(std::vector<Obs>(10, testutil::obs2(0, 0)));
  long id1 = buffer.add(std::vector<Obs>(10, testutil::obs2(1, 1)));
  CHECK(buffer.total_steps() == 20);
  long id2 = buffer.add(std::vector<Obs>(10, testutil::obs2(2, 2)));
  CHECK(buffer.total_steps() == 20);  // first trajectory dropped whole
  CHECK(buffer.num_trajectories() == 2);
  CHECK(buffer.trajectory(0).id == id1);
  CHECK(buffer.trajectory(1).id == id2);
  CHECK(id0 != id1);
  CHECK(id1 != id2);
}

TEST_CASE("trajectory text dumps round-trip") {
  Rng rng(55);
  TrajectoryBuffer buffer = random_buffer(3, 7, rng);
  std::stringstream ss;
  write_trajectories(ss, buffer);
  TrajectoryBuffer back = read_trajectories(ss, buffer.capacity());
  REQUIRE(back.num_trajectories() == buffer.num_trajectories());
  for (std::size_t k = 0; k < buffer.num_trajectories(); ++k) {
    const auto& t0 = buffer.trajectory(k);
    const auto& t1 = back.trajectory(k);
    REQUIRE(t0.states.size() == t1.states.size());
    for (std::size_t i = 0; i < t0.states.size(); ++i)
      CHECK(exact_eq(t0.states[i], t1.states[i]));
  }
}

TEST_CASE("score, logit and distance stay algebraically consistent") {
  Rng rng(56);
  RNetModel model = RNetModel::init(2, 5, rng);
  for (int k = 0; k < 100; ++k) {
    Obs a = testutil::obs2(rng.uniform(), rng.uniform());
    Obs b = testutil::obs2(rng.uniform(), rng.uniform());
    double logit = rnet_logit(model, a, b);
    CHECK(rnet_score(model, a, b) == sigmoid(logit));
    CHECK(rnet_distance(model, a, b) == -logit);
    CHECK(rnet_distance(model, a, b) + logit == 0.0);
    CHECK(rnet_score(model, a, b) > 0.0);
    CHECK(rnet_score(model, a, b) < 1.0);
  }
}

TEST_CASE("zeroed comparator output layer gives logit 0") {
  Rng rng(57);
  RNetModel model = RNetModel::init(2, 5, rng);
  int last = model.comparator.spec().num_layers() - 1;
  model.comparator.weight(last).setZero();
  model.comparator.bias(last).setZero();
  CHECK(rnet_logit(model, testutil::obs2(0.3, 0.4), testutil::obs2(0.9, 0.2)) ==
        0.0);
  CHECK(rnet_score(model, testutil::obs2(0.1, 0.1), testutil::obs2(0.1, 0.1)) ==
        0.5);
}

TEST_CASE("the comparator is not forced to be symmetric") {
  Rng rng(58);
  RNetModel model = RNetModel::init(2, 5, rng);
  bool asymmetric = false;
  for (int k = 0; k < 20 && !asymmetric; ++k) {
    Obs a = testutil::obs2(rng.uniform(), rng.uniform());
    Obs b = testutil::obs2(rng.uniform(), rng.uniform());
    asymmetric = rnet_logit(model, a, b) != rnet_logit(model, b, a);
  }
  CHECK(asymmetric);
}

TEST_CASE("embedding has the declared width and is deterministic") {
  Rng rng(59);
  RNetModel model = RNetModel::init(5, 5, rng);
  Obs s(5);
  s << 0.1, 0.9, 1, 0, 0;
  VectorXd e1 = rnet_embed(model, s);
  VectorXd e2 = rnet_embed(model, s);
  CHECK(e1.size() == 16);
  CHECK(exact_eq(e1, e2));
}

TEST_CASE("rnet_train with zero steps leaves the model unchanged") {
  Rng rng(60);
  RNetModel model = RNetModel::init(2, 5, rng);
  VectorXd emb = model.embedder.params();
  VectorXd cmp = model.comparator.params();
  TrajectoryBuffer buffer = random_buffer(3, 30, rng);
  RNetOptimizer opt = RNetOptimizer::for_model(model, 1e-3);
  Rng train_rng(1);
  RNetTrainStats stats = rnet_train(model, buffer, 0, 64, opt, train_rng);
  CHECK(stats.steps == 0);
  CHECK(exact_eq(emb, model.embedder.params()));
  CHECK(exact_eq(cmp, model.comparator.params()));
}

TEST_CASE("rnet training is deterministic in seed and buffer") {
  Rng rng(61);
  TrajectoryBuffer buffer = random_buffer(4, 40, rng);
  Rng i1(5), i2(5);
  RNetModel m1 = RNetModel::init(2, 5, i1);
  RNetModel m2 = RNetModel::init(2, 5, i2);
  RNetOptimizer o1 = RNetOptimizer::for_model(m1, 1e-3);
  RNetOptimizer o2 = RNetOptimizer::for_model(m2, 1e-3);
  Rng t1(9), t2(9);
  rnet_train(m1, buffer, 50, 32, o1, t1);
  rnet_train(m2, buffer, 50, 32, o2, t2);
  CHECK(exact_eq(m1.embedder.params(), m2.embedder.params()));
  CHECK(exact_eq(m1.comparator.params(), m2.comparator.params()));
  CHECK(m1.version == 1);
}

TEST_CASE("rnet checkpoints round-trip") {
  Rng rng(62);
  RNetModel model = RNetModel::init(5, 7, rng);
  std::stringstream ss;
  save_rnet(ss, model);
  RNetModel back = load_rnet(ss);
  CHECK(back.tau_reach == 7);
  CHECK(exact_eq(back.embedder.params(), model.embedder.params()));
  CHECK(exact_eq(back.comparator.params(), model.comparator.params()));
}
