#include "reachrl/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace reachrl {

std::string to_string(RewardMode m) {
  switch (m) {
    case RewardMode::rnet: return "rnet";
    case RewardMode::graph: return "graph";
    case RewardMode::oracle: return "oracle";
  }
  return "?";
}

std::string to_string(InsertMode m) {
  switch (m) {
    case InsertMode::filtered: return "filtered";
    case InsertMode::weighted: return "weighted";
    case InsertMode::oracle: return "oracle";
  }
  return "?";
}

std::string to_string(GoalSource m) {
  return m == GoalSource::memory ? "memory" : "eval";
}

int RunConfig::resolved_policy_phase_len() const {
  if (policy_phase_len > 0) return policy_phase_len;
  return env == "pusher" ? 50 : 100;
}

int RunConfig::resolved_random_phase_len() const {
  if (random_phase_len > 0) return random_phase_len;
  return resolved_policy_phase_len();
}

namespace {

struct FieldBinding {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& v) {
  std::istringstream is(v);
  T out;
  is >> out;
  if (!is || !is.eof()) throw std::invalid_argument("not a number: " + v);
  return out;
}

RewardMode parse_reward_mode(const std::string& v) {
  if (v == "rnet") return RewardMode::rnet;
  if (v == "graph") return RewardMode::graph;
  if (v == "oracle") return RewardMode::oracle;
  throw std::invalid_argument("reward_mode must be rnet|graph|oracle");
}

InsertMode parse_insert_mode(const std::string& v) {
  if (v == "filtered") return InsertMode::filtered;
  if (v == "weighted") return InsertMode::weighted;
  if (v == "oracle") return InsertMode::oracle;
  throw std::invalid_argument("memory_mode must be filtered|weighted|oracle");
}

GoalSource parse_goal_source(const std::string& v) {
  if (v == "memory") return GoalSource::memory;
  if (v == "eval") return GoalSource::eval;
  throw std::invalid_argument("goal_source must be memory|eval");
}

// Canonical field order; render emits in this order.
const std::vector<std::pair<std::string, FieldBinding>>& bindings() {
  static const std::vector<std::pair<std::string, FieldBinding>> kBindings = [] {
    std::vector<std::pair<std::string, FieldBinding>> b;
    auto add = [&b](const std::string& key, auto setter, auto getter) {
      b.push_back({key, {setter, getter}});
    };
    add("env",
        [](RunConfig& c, const std::string& v) {
          if (v != "maze" && v != "pusher")
            throw std::invalid_argument("env must be maze|pusher");
          c.env = v;
        },
        [](const RunConfig& c) { return c.env; });
    add("reward_mode",
        [](RunConfig& c, const std::string& v) { c.reward_mode = parse_reward_mode(v); },
        [](const RunConfig& c) { return to_string(c.reward_mode); });
    add("memory_mode",
        [](RunConfig& c, const std::string& v) { c.memory_mode = parse_insert_mode(v); },
        [](const RunConfig& c) { return to_string(c.memory_mode); });
    add("goal_source",
        [](RunConfig& c, const std::string& v) { c.goal_source = parse_goal_source(v); },
        [](const RunConfig& c) { return to_string(c.goal_source); });
    add("seed",
        [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>(v); },
        [](const RunConfig& c) { return std::to_string(c.seed); });
    add("total_policy_steps",
        [](RunConfig& c, const std::string& v) { c.total_policy_steps = parse_number<long>(v); },
        [](const RunConfig& c) { return std::to_string(c.total_policy_steps); });
    add("policy_phase_len",
        [](RunConfig& c, const std::string& v) { c.policy_phase_len = parse_number<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.policy_phase_len); });
    add("random_phase_len",
        [](RunConfig& c, const std::string& v) { c.random_phase_len = parse_number<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.random_phase_len); });
    add("rnet_retrain_every",
        [](RunConfig& c, const std::string& v) { c.rnet_retrain_every = parse_number<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.rnet_retrain_every); });
    add("rnet_steps_per_retrain",
        [](RunConfig& c, const std::string& v) { c.rnet_steps_per_retrain = parse_number<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.rnet_steps_per_retrain); });
    add("rnet_batch",
        [](RunConfig& c, const std::string& v) { c.rnet_batch = parse_number<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.rnet_batch); });
    add("rnet_lr",
        [](RunConfig& c, const std::string& v) { c.rnet_lr = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt_double(c.rnet_lr); });
    add("buffer_capacity",
        [](RunConfig& c, const std::string& v) { c.buffer_capacity = parse_number<long>(v); },
        [](const RunConfig& c) { return std::to_string(c.buffer_capacity); });
    add("eval_every",
        [](RunConfig& c, const std::string& v) { c.eval_every = parse_number<long>(v); },
        [](const RunConfig& c) { return std::to_string(c.eval_every); });
    add("eval_goal_count",
        [](RunConfig& c, const std::string& v) { c.eval_goal_count = parse_number<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.eval_goal_count); });
    add("tau_reach",
        [](RunConfig& c, const std::string& v) { c.tau_reach = parse_number<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.tau_reach); });
    add("tau_memory",
        [](RunConfig& c, const std::string& v) { c.tau_memory = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt_double(c.tau_memory); });
    add("tau_graph",
        [](RunConfig& c, const std::string& v) { c.tau_graph = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt_double(c.tau_graph); });
    add("k_max",
        [](RunConfig& c, const std::string& v) { c.k_max = parse_number<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.k_max); });
    add("gamma",
        [](RunConfig& c, const std::string& v) { c.gamma = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt_double(c.gamma); });
    add("polyak",
        [](RunConfig& c, const std::string& v) { c.polyak = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt_double(c.polyak); });
    add("lr",
        [](RunConfig& c, const std::string& v) { c.lr = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt_double(c.lr); });
    add("sac_batch",
        [](RunConfig& c, const std::string& v) { c.sac_batch = parse_number<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.sac_batch); });
    add("replay_capacity",
        [](RunConfig& c, const std::string& v) { c.replay_capacity = parse_number<long>(v); },
        [](const RunConfig& c) { return std::to_string(c.replay_capacity); });
    add("hidden_dim",
        [](RunConfig& c, const std::string& v) { c.hidden_dim = parse_number<int>(v); },
        [](const RunConfig& c) { return std::to_string(c.hidden_dim); });
    add("reward_clip",
        [](RunConfig& c, const std::string& v) { c.reward_clip = parse_number<double>(v); },
        [](const RunConfig& c) { return fmt_double(c.reward_clip); });
    add("out_dir",
        [](RunConfig& c, const std::string& v) { c.out_dir = v; },
        [](const RunConfig& c) { return c.out_dir; });
    return b;
  }();
  return kBindings;
}

const FieldBinding* find_binding(const std::string& key) {
  for (const auto& [k, binding] : bindings())
    if (k == key) return &binding;
  return nullptr;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  std::vector<std::string> seen;
  while (std::getline(is, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const FieldBinding* binding = find_binding(key);
    if (!binding)
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" +
                        key + "'");
    for (const auto& s : seen)
      if (s == key)
        throw ConfigError("line " + std::to_string(lineno) +
                          ": duplicate key '" + key + "'");
    seen.push_back(key);
    try {
      binding->set(cfg, value);
    } catch (const std::exception& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": bad value for '" +
                        key + "': " + e.what());
    }
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& [key, binding] : bindings())
    os << key << " = " << binding.get(cfg) << "\n";
  return os.str();
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key=value: " + assignment);
  std::string key = trim(assignment.substr(0, eq));
  std::string value = trim(assignment.substr(eq + 1));
  const FieldBinding* binding = find_binding(key);
  if (!binding) throw ConfigError("unknown key '" + key + "'");
  try {
    binding->set(cfg, value);
  } catch (const std::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

void validate_config(const RunConfig& cfg) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(cfg.total_policy_steps > 0, "total_policy_steps must be positive");
  require(cfg.policy_phase_len >= 0, "policy_phase_len must be >= 0");
  require(cfg.random_phase_len >= 0, "random_phase_len must be >= 0");
  require(cfg.rnet_retrain_every > 0, "rnet_retrain_every must be positive");
  require(cfg.rnet_steps_per_retrain >= 0,
          "rnet_steps_per_retrain must be >= 0");
  require(cfg.rnet_batch > 1, "rnet_batch must be > 1");
  require(cfg.rnet_lr > 0, "rnet_lr must be positive");
  require(cfg.buffer_capacity > 0, "buffer_capacity must be positive");
  require(cfg.eval_every > 0, "eval_every must be positive");
  require(cfg.eval_goal_count > 0, "eval_goal_count must be positive");
  require(cfg.tau_reach >= 1, "tau_reach must be >= 1");
  require(cfg.tau_memory > 0, "tau_memory must be positive");
  require(cfg.tau_graph > 0 && cfg.tau_graph < 1,
          "tau_graph must be in (0, 1)");
  require(cfg.k_max >= 1, "k_max must be >= 1");
  require(cfg.gamma > 0 && cfg.gamma < 1, "gamma must be in (0, 1)");
  require(cfg.polyak > 0 && cfg.polyak < 1, "polyak must be in (0, 1)");
  require(cfg.lr > 0, "lr must be positive");
  require(cfg.sac_batch >= 2, "sac_batch must be >= 2");
  require(cfg.replay_capacity >= cfg.sac_batch,
          "replay_capacity must hold at least one batch");
  require(cfg.hidden_dim >= 1, "hidden_dim must be >= 1");
  require(cfg.reward_clip > 0, "reward_clip must be positive");
  require(cfg.memory_mode != InsertMode::oracle || cfg.env == "pusher",
          "memory_mode = oracle needs env = pusher");
}

std::string variant_token(const RunConfig& cfg) {
  bool oracle_mem = cfg.memory_mode == InsertMode::oracle;
  if (cfg.reward_mode == RewardMode::oracle) {
    if (cfg.goal_source == GoalSource::eval) return "topline";
    return oracle_mem ? "oracle" : "oracle-reward";
  }
  if (cfg.reward_mode == RewardMode::graph) return "graph";
  return oracle_mem ? "oracle-memory" : "unsup";
}

}  // namespace reachrl
