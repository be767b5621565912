#include <doctest.h>

#include "reachrl/config.hpp"

using namespace reachrl;

TEST_CASE("defaults parse from an empty config") {
  RunConfig cfg = parse_config("");
  CHECK(cfg.env == "maze");
  CHECK(cfg.reward_mode == RewardMode::rnet);
  CHECK(cfg.tau_memory == 0.5);
  CHECK(cfg.total_policy_steps == 200000);
  CHECK(cfg.resolved_policy_phase_len() == 100);
  cfg.env = "pusher";
  CHECK(cfg.resolved_policy_phase_len() == 50);
  CHECK(cfg.resolved_random_phase_len() == 50);
}

TEST_CASE("config text round-trips through render and parse") {
  RunConfig cfg;
  cfg.env = "pusher";
  cfg.reward_mode = RewardMode::graph;
  cfg.memory_mode = InsertMode::weighted;
  cfg.goal_source = GoalSource::eval;
  cfg.seed = 123456789;
  cfg.tau_memory = 0.95;
  cfg.rnet_lr = 3.25e-4;
  cfg.out_dir = "/tmp/xyz";
  RunConfig back = parse_config(render_config(cfg));
  CHECK(back == cfg);
}

TEST_CASE("unknown keys are rejected with their line number") {
  try {
    parse_config("env = maze\nfoo = 1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("foo") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
}

TEST_CASE("duplicate keys are rejected") {
  CHECK_THROWS_AS(parse_config("seed = 1\nseed = 2\n"), ConfigError);
}

TEST_CASE("comments and blank lines are ignored") {
  RunConfig cfg = parse_config(
      "# a comment\n\nseed = 9  # trailing comment\n   env = pusher\n");
  CHECK(cfg.seed == 9);
  CHECK(cfg.env == "pusher");
}

TEST_CASE("malformed values name the key and line") {
  try {
    parse_config("seed = banana\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("seed") != std::string::npos);
    CHECK(msg.find("line 1") != std::string::npos);
  }
}

TEST_CASE("overrides apply on top of the file") {
  RunConfig cfg = parse_config("seed = 1\n");
  apply_override(cfg, "seed=42");
  apply_override(cfg, "reward_mode=graph");
  CHECK(cfg.seed == 42);
  CHECK(cfg.reward_mode == RewardMode::graph);
  CHECK_THROWS_AS(apply_override(cfg, "foo=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "no_equals"), ConfigError);
}

TEST_CASE("validation rejects inconsistent settings") {
  RunConfig cfg;
  CHECK_NOTHROW(validate_config(cfg));
  cfg.memory_mode = InsertMode::oracle;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);  // maze has no oracle filter
  cfg.env = "pusher";
  CHECK_NOTHROW(validate_config(cfg));
  cfg.total_policy_steps = 0;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg = RunConfig{};
  cfg.tau_graph = 1.5;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg = RunConfig{};
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("variant tokens match the paper's naming") {
  RunConfig cfg;
  cfg.reward_mode = RewardMode::oracle;
  cfg.goal_source = GoalSource::eval;
  CHECK(variant_token(cfg) == "topline");
  cfg = RunConfig{};
  cfg.reward_mode = RewardMode::rnet;
  CHECK(variant_token(cfg) == "unsup");
  cfg.reward_mode = RewardMode::graph;
  CHECK(variant_token(cfg) == "graph");
  cfg = RunConfig{};
  cfg.env = "pusher";
  cfg.reward_mode = RewardMode::oracle;
  cfg.memory_mode = InsertMode::oracle;
  CHECK(variant_token(cfg) == "oracle");
  cfg.memory_mode = InsertMode::filtered;
  CHECK(variant_token(cfg) == "oracle-reward");
  cfg.reward_mode = RewardMode::rnet;
  cfg.memory_mode = InsertMode::oracle;
  CHECK(variant_token(cfg) == "oracle-memory");
}
