#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace reachrl {

enum class RewardMode { rnet, graph, oracle };
enum class InsertMode { filtered, weighted, oracle };
enum class GoalSource { memory, eval };

std::string to_string(RewardMode m);
std::string to_string(InsertMode m);
std::string to_string(GoalSource m);

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key = value run configuration. policy_phase_len / random_phase_len
// of 0 resolve to the per-environment defaults.
struct RunConfig {
  std::string env = "maze";
  RewardMode reward_mode = RewardMode::rnet;
  InsertMode memory_mode = InsertMode::filtered;
  GoalSource goal_source = GoalSource::memory;
  std::uint64_t seed = 0;
  long total_policy_steps = 200000;
  int policy_phase_len = 0;
  int random_phase_len = 0;
  int rnet_retrain_every = 10;
  int rnet_steps_per_retrain = 500;
  int rnet_batch = 128;
  double rnet_lr = 1e-3;
  long buffer_capacity = 200000;
  long eval_every = 10000;
  int eval_goal_count = 500;
  int tau_reach = 5;
  double tau_memory = 0.5;
  double tau_graph = 0.5;
  int k_max = 5;
  double gamma = 0.99;
  double polyak = 0.995;
  double lr = 3e-4;
  int sac_batch = 256;
  long replay_capacity = 1000000;
  int hidden_dim = 32;
  double reward_clip = 10.0;
  std::string out_dir = "runs";

  bool operator==(const RunConfig&) const = default;

  int resolved_policy_phase_len() const;
  int resolved_random_phase_len() const;
};

// Throws ConfigError naming the offending line on unknown keys, duplicate
// keys or malformed values.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

std::string render_config(const RunConfig& cfg);

// `key=value` command-line override.
void apply_override(RunConfig& cfg, const std::string& assignment);

// Throws ConfigError when field combinations are invalid.
void validate_config(const RunConfig& cfg);

// Learning-curve variant token used for run directory names and the
// aggregator columns: topline | unsup | graph, with oracle ablations mapped
// to oracle / oracle-reward / oracle-memory.
std::string variant_token(const RunConfig& cfg);

}  // namespace reachrl
