#pragma once

#include <array>
#include <optional>

#include "reachrl/config.hpp"
#include "reachrl/curve.hpp"
#include "reachrl/memory.hpp"
#include "reachrl/sac.hpp"

namespace reachrl {

struct EvalReport {
  long step = 0;
  std::vector<double> final_distances;
  std::vector<int> goal_rooms;  // maze only, parallel to final_distances
  double mean = 0.0;
  double stddev = 0.0;
  double success_rate = 0.0;                   // final distance < 0.1
  std::array<double, 4> room_success = {0, 0, 0, 0};  // maze
  double hand_mean = 0.0;                      // pusher
};

// Deterministic rollouts with the mean action; the oracle metric scores the
// final state of each rollout.
EvalReport evaluate(const SAC& sac, const Env& env, const std::vector<Obs>& goals,
                    int horizon);

struct TrainStats {
  long episodes = 0;
  long policy_steps = 0;
  long rnet_reward_calls = 0;
  long rnet_insert_calls = 0;
  long rnet_trainings = 0;
  long memory_rejections = 0;
};

double compute_reward(RewardMode mode, const RNetModel* rnet,
                      const MemoryGraph* graph, const GoalMemory* memory,
                      const Env& env, const Obs& s, const Obs& g, double clip,
                      int goal_node = -1, TrainStats* stats = nullptr);

struct EpisodeResult {
  std::vector<Transition> transitions;
  std::vector<Obs> random_trajectory;
  Obs goal;
  bool had_goal = false;
};

struct EpisodeContext {
  Env& env;
  SAC& sac;
  GoalMemory& memory;
  const MemoryGraph* graph = nullptr;
  const RNetModel* rnet = nullptr;
  const RunConfig& cfg;
  const std::vector<Obs>* eval_goals = nullptr;  // goal_source = eval
  Rng& rng_goal;
  Rng& rng_policy;
  Rng& rng_random;
  TrainStats* stats = nullptr;
  int policy_budget = -1;  // cap on stage-1 steps, -1 = full phase
};

// Stage 1: roll the policy towards a sampled goal with one SAC update per
// environment step. Stage 2: continue with uniform random actions; the
// returned trajectory starts at the state where the policy phase ended.
EpisodeResult run_episode(EpisodeContext& ctx);

// Copies of everything a reward depends on, captured per episode when the
// hooks ask for them.
struct Snapshot {
  long episode = 0;
  RNetModel rnet;
  std::optional<MemoryGraph> graph;
  GoalMemory memory;
};

struct TrainHooks {
  bool retain_snapshots = false;
  bool retain_transitions = false;
};

struct MemoryDump {
  long step = -1;
  std::vector<Obs> entries;
  std::vector<double> weights;
};

struct TrainResult {
  std::vector<EvalReport> curve;
  TrainStats stats;
  std::array<MemoryDump, 3> dumps;  // at 0%, 20% and 100% of training
  SAC sac;
  RNetModel rnet;
  GoalMemory memory;
  std::optional<MemoryGraph> graph;
  std::vector<Obs> eval_goals;
  // populated when the hooks retain them
  std::vector<Snapshot> snapshots;
  std::vector<Transition> transitions;
  std::vector<long> transition_episode;
};

// Full training loop: two-stage episodes, memory insertion from the random
// phase, periodic reachability retraining and graph rebuilds, periodic
// evaluation. Writes curve/dumps/checkpoints under run_dir unless empty.
TrainResult train(const RunConfig& cfg, const std::string& run_dir = "",
                  const TrainHooks& hooks = {});

// oracle-reward | oracle-memory | oracle variants of the pusher ablation.
TrainResult run_ablation(const std::string& variant, RunConfig cfg,
                         const std::string& run_dir = "");

}  // namespace reachrl
