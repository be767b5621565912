#include "reachrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace reachrl {

namespace {

double sample_stddev(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace

EvalReport evaluate(const SAC& sac, const Env& env,
                    const std::vector<Obs>& goals, int horizon) {
  if (goals.empty()) throw std::invalid_argument("evaluate: no goals");
  int G = static_cast<int>(goals.size());
  int od = env.obs_dim();

  std::vector<std::unique_ptr<Env>> envs;
  envs.reserve(G);
  MatrixXd sg(G, 2 * od);
  for (int i = 0; i < G; ++i) {
    envs.push_back(env.clone());
    Obs o = envs.back()->reset();
    sg.row(i) << o.transpose(), goals[i].transpose();
  }
  for (int t = 0; t < horizon; ++t) {
    MatrixXd actions = actor_mean_batch(sac, sg);
    for (int i = 0; i < G; ++i) {
      Obs o = envs[i]->step(Action(actions(i, 0), actions(i, 1)));
      sg.row(i).head(od) = o.transpose();
    }
  }

  EvalReport report;
  report.final_distances.resize(G);
  double sum = 0.0;
  std::array<int, 4> room_goals = {0, 0, 0, 0};
  std::array<int, 4> room_hits = {0, 0, 0, 0};
  int hits = 0;
  double hand_sum = 0.0;
  for (int i = 0; i < G; ++i) {
    Obs final_obs = envs[i]->observe();
    double d = env.oracle_distance(final_obs, goals[i]);
    report.final_distances[i] = d;
    sum += d;
    bool hit = d < 0.1;
    hits += hit;
    if (env.kind() == EnvKind::maze) {
      int room = room_of(goals[i][0], goals[i][1]);
      report.goal_rooms.push_back(room);
      room_goals[room - 1] += 1;
      room_hits[room - 1] += hit;
    } else {
      hand_sum += hand_distance(final_obs, goals[i]);
    }
  }
  report.mean = sum / G;
  report.stddev = sample_stddev(report.final_distances, report.mean);
  report.success_rate = static_cast<double>(hits) / G;
  for (int r = 0; r < 4; ++r)
    report.room_success[r] =
        room_goals[r] > 0
            ? static_cast<double>(room_hits[r]) / room_goals[r]
            : 0.0;
  if (env.kind() == EnvKind::pusher) report.hand_mean = hand_sum / G;
  return report;
}

double compute_reward(RewardMode mode, const RNetModel* rnet,
                      const MemoryGraph* graph, const GoalMemory* memory,
                      const Env& env, const Obs& s, const Obs& g, double clip,
                      int goal_node, TrainStats* stats) {
  switch (mode) {
    case RewardMode::oracle:
      return -env.oracle_distance(s, g);
    case RewardMode::rnet: {
      if (!rnet) throw std::runtime_error("rnet reward without a model");
      if (stats) stats->rnet_reward_calls += 1;
      double d = rnet_distance(*rnet, s, g);
      return -std::clamp(d, -clip, clip);
    }
    case RewardMode::graph: {
      if (!rnet || !graph || !memory || memory->size() == 0)
        throw std::runtime_error("graph reward without graph/memory");
      if (stats) stats->rnet_reward_calls += 1;
      if (goal_node < 0) goal_node = nearest_node(*memory, *rnet, g);
      return -graph_distance_to_node(*graph, *memory, *rnet, s, goal_node);
    }
  }
  throw std::logic_error("unreachable");
}

EpisodeResult run_episode(EpisodeContext& ctx) {
  const RunConfig& cfg = ctx.cfg;
  EpisodeResult result;
  int phase = cfg.resolved_policy_phase_len();
  if (ctx.policy_budget >= 0) phase = std::min(phase, ctx.policy_budget);
  int random_phase = cfg.resolved_random_phase_len();

  Obs s = ctx.env.observe();

  bool have_goal = false;
  Obs goal;
  if (cfg.goal_source == GoalSource::eval) {
    if (!ctx.eval_goals || ctx.eval_goals->empty())
      throw std::runtime_error("goal_source=eval without an evaluation set");
    goal = (*ctx.eval_goals)[ctx.rng_goal.uniform_int(
        static_cast<int>(ctx.eval_goals->size()))];
    have_goal = true;
  } else if (ctx.memory.size() > 0) {
    goal = ctx.memory.sample_goal(ctx.rng_goal).first;
    have_goal = true;
  }

  if (have_goal) {
    result.goal = goal;
    result.had_goal = true;
    int goal_node = -1;
    if (cfg.reward_mode == RewardMode::graph) {
      if (!ctx.graph) throw std::runtime_error("graph reward without graph");
      goal_node = nearest_node(ctx.memory, *ctx.rnet, goal);
    }
    for (int t = 0; t < phase; ++t) {
      auto [a, logp] = actor_sample(ctx.sac, s, goal, ctx.rng_policy);
      Obs s2 = ctx.env.step(Action(a[0], a[1]));
      double r = compute_reward(cfg.reward_mode, ctx.rnet, ctx.graph,
                                &ctx.memory, ctx.env, s2, goal,
                                cfg.reward_clip, goal_node, ctx.stats);
      Transition tr;
      tr.s = s;
      tr.g = goal;
      tr.a = a;
      tr.r = r;
      tr.s2 = s2;
      tr.done = false;
      ctx.sac.replay.push(tr);
      result.transitions.push_back(std::move(tr));
      if (ctx.sac.replay.size() >=
          static_cast<std::size_t>(ctx.sac.cfg.batch)) {
        auto batch = ctx.sac.replay.sample(ctx.sac.cfg.batch, ctx.rng_policy);
        sac_update(ctx.sac, batch, ctx.rng_policy);
      }
      s = std::move(s2);
    }
  }

  // stage 2: random walk continuing from the reached state
  result.random_trajectory.push_back(s);
  for (int t = 1; t < random_phase; ++t) {
    Action a(ctx.rng_random.uniform(-1.0, 1.0), ctx.rng_random.uniform(-1.0, 1.0));
    s = ctx.env.step(a);
    result.random_trajectory.push_back(s);
  }
  return result;
}

namespace {

bool buffer_ready(const TrajectoryBuffer& buffer, int tau_reach) {
  if (buffer.num_trajectories() < 2) return false;
  for (std::size_t k = 0; k < buffer.num_trajectories(); ++k)
    if (static_cast<int>(buffer.trajectory(k).states.size()) >=
        2 * tau_reach + 2)
      return true;
  return false;
}

// Add the nodes the memory gained since the graph was built; edges between
// pre-existing nodes are unchanged because the model version is the same.
void extend_graph(MemoryGraph& graph, const GoalMemory& memory,
                  const RNetModel& model) {
  int old_n = graph.nodes;
  int n = memory.size();
  if (n == old_n) return;
  const MatrixXd& emb = memory.embedding_cache(model);
  graph.adjacency.resize(n);
  for (int i = old_n; i < n; ++i) {
    VectorXd out_logits =
        rnet_logits_against(model, emb.row(i).transpose(), emb.topRows(i));
    MatrixXd cat(i, 2 * model.embedding_dim());
    cat.leftCols(model.embedding_dim()) = emb.topRows(i);
    cat.rightCols(model.embedding_dim()).rowwise() = emb.row(i);
    VectorXd in_logits = model.comparator.forward_batch(cat).col(0);
    for (int j = 0; j < i; ++j) {
      double s = std::max(sigmoid(out_logits[j]), sigmoid(in_logits[j]));
      if (s > graph.tau_graph) {
        graph.adjacency[i].push_back(j);
        graph.adjacency[j].push_back(i);
      }
    }
  }
  graph.nodes = n;
  graph.dist = all_pairs_hops(graph.adjacency);
}

MemoryDump capture_dump(const GoalMemory& memory, long step) {
  MemoryDump dump;
  dump.step = step;
  for (int i = 0; i < memory.size(); ++i) {
    dump.entries.push_back(memory.entry(i));
    dump.weights.push_back(memory.weight(i));
  }
  return dump;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

}  // namespace

TrainResult train(const RunConfig& cfg, const std::string& run_dir,
                  const TrainHooks& hooks) {
  validate_config(cfg);
  auto env = make_env(cfg.env);
  int phase = cfg.resolved_policy_phase_len();

  Rng rng_init = sub_rng(cfg.seed, "init");
  Rng rng_goal = sub_rng(cfg.seed, "goal");
  Rng rng_policy = sub_rng(cfg.seed, "policy");
  Rng rng_random = sub_rng(cfg.seed, "random-walk");
  Rng rng_rnet = sub_rng(cfg.seed, "rnet");
  Rng rng_eval_goals = sub_rng(cfg.seed, "eval-goals");

  TrainResult res;
  res.rnet = RNetModel::init(env->obs_dim(), cfg.tau_reach, rng_init);
  RNetOptimizer rnet_opt = RNetOptimizer::for_model(res.rnet, cfg.rnet_lr);

  SACConfig scfg;
  scfg.obs_dim = env->obs_dim();
  scfg.goal_dim = env->obs_dim();
  scfg.action_dim = 2;
  scfg.hidden = cfg.hidden_dim;
  scfg.gamma = cfg.gamma;
  scfg.polyak = cfg.polyak;
  scfg.lr = cfg.lr;
  scfg.batch = cfg.sac_batch;
  scfg.replay_capacity = static_cast<std::size_t>(cfg.replay_capacity);
  res.sac = SAC::init(scfg, rng_init);

  res.memory = GoalMemory(cfg.memory_mode == InsertMode::weighted
                              ? MemoryMode::weighted
                              : MemoryMode::filtered,
                          cfg.tau_memory, cfg.k_max);
  TrajectoryBuffer buffer(static_cast<std::size_t>(cfg.buffer_capacity));

  bool topline = cfg.goal_source == GoalSource::eval &&
                 cfg.reward_mode == RewardMode::oracle;
  bool rnet_used = cfg.reward_mode == RewardMode::rnet ||
                   cfg.reward_mode == RewardMode::graph ||
                   (!topline && cfg.memory_mode != InsertMode::oracle);

  res.eval_goals = env->sample_eval_goals(cfg.eval_goal_count, rng_eval_goals);

  Obs start = env->reset();
  res.memory.force_insert(start);

  std::optional<MemoryGraph> graph;
  if (cfg.reward_mode == RewardMode::graph)
    graph = build_graph(res.memory, res.rnet, cfg.tau_graph);

  res.curve.push_back(evaluate(res.sac, *env, res.eval_goals, phase));
  res.curve.back().step = 0;
  res.dumps[0] = capture_dump(res.memory, 0);

  long steps_done = 0;
  long next_eval = cfg.eval_every;
  long dump20_at = cfg.total_policy_steps / 5;
  bool dumped20 = false;
  std::vector<Obs> last_random_traj;

  while (steps_done < cfg.total_policy_steps) {
    if (hooks.retain_snapshots) {
      Snapshot snap;
      snap.episode = res.stats.episodes;
      snap.rnet = res.rnet;
      snap.graph = graph;
      snap.memory = res.memory;
      res.snapshots.push_back(std::move(snap));
    }

    EpisodeContext ctx{.env = *env,
                       .sac = res.sac,
                       .memory = res.memory,
                       .graph = graph ? &*graph : nullptr,
                       .rnet = &res.rnet,
                       .cfg = cfg,
                       .eval_goals = &res.eval_goals,
                       .rng_goal = rng_goal,
                       .rng_policy = rng_policy,
                       .rng_random = rng_random,
                       .stats = &res.stats,
                       .policy_budget = static_cast<int>(std::min<long>(
                           phase, cfg.total_policy_steps - steps_done))};
    EpisodeResult ep = run_episode(ctx);
    steps_done += static_cast<long>(ep.transitions.size());
    res.stats.policy_steps = steps_done;
    res.stats.episodes += 1;

    if (hooks.retain_transitions) {
      for (auto& t : ep.transitions) {
        res.transitions.push_back(t);
        res.transition_episode.push_back(res.stats.episodes - 1);
      }
    }

    if (!topline) {
      last_random_traj = ep.random_trajectory;
      buffer.add(ep.random_trajectory);
      for (const Obs& o : ep.random_trajectory) {
        bool accepted;
        if (cfg.memory_mode == InsertMode::oracle) {
          accepted = res.memory.oracle_try_insert(o, *env);
        } else {
          res.stats.rnet_insert_calls += 1;
          accepted = res.memory.try_insert(o, res.rnet);
        }
        if (!accepted) res.stats.memory_rejections += 1;
      }

      if (rnet_used && res.stats.episodes % cfg.rnet_retrain_every == 0 &&
          buffer_ready(buffer, cfg.tau_reach)) {
        rnet_train(res.rnet, buffer, cfg.rnet_steps_per_retrain, cfg.rnet_batch,
                   rnet_opt, rng_rnet);
        res.stats.rnet_trainings += 1;
        res.memory.refresh_cache(res.rnet);
        if (cfg.reward_mode == RewardMode::graph)
          graph = build_graph(res.memory, res.rnet, cfg.tau_graph);
      } else if (cfg.reward_mode == RewardMode::graph) {
        extend_graph(*graph, res.memory, res.rnet);
      }
    }

    if (!dumped20 && steps_done >= dump20_at) {
      res.dumps[1] = capture_dump(res.memory, steps_done);
      dumped20 = true;
    }
    while (next_eval <= cfg.total_policy_steps && steps_done >= next_eval) {
      res.curve.push_back(evaluate(res.sac, *env, res.eval_goals, phase));
      res.curve.back().step = next_eval;
      next_eval += cfg.eval_every;
    }
  }
  res.dumps[2] = capture_dump(res.memory, steps_done);
  res.graph = graph;

  if (!run_dir.empty()) {
    namespace fs = std::filesystem;
    fs::path dir(run_dir);
    fs::create_directories(dir);

    std::vector<CurveRow> rows;
    for (const EvalReport& r : res.curve)
      rows.push_back({r.step, r.mean, r.stddev});
    std::ostringstream curve_os;
    write_curve_fragment(curve_os, rows);
    write_text_file(dir / "curve.txt", curve_os.str());

    auto names = env->obs_names();
    const char* dump_names[3] = {"memory_p00.txt", "memory_p20.txt",
                                 "memory_p100.txt"};
    for (int d = 0; d < 3; ++d) {
      std::ostringstream os;
      os << "index weight";
      for (const auto& n : names) os << ' ' << n;
      os << "\n";
      char buf[64];
      for (std::size_t i = 0; i < res.dumps[d].entries.size(); ++i) {
        os << i;
        std::snprintf(buf, sizeof(buf), "%.17g", res.dumps[d].weights[i]);
        os << ' ' << buf;
        const Obs& o = res.dumps[d].entries[i];
        for (Eigen::Index c = 0; c < o.size(); ++c) {
          std::snprintf(buf, sizeof(buf), "%.17g", o[c]);
          os << ' ' << buf;
        }
        os << "\n";
      }
      write_text_file(dir / dump_names[d], os.str());
    }

    {
      std::ofstream f(dir / "policy.ckpt", std::ios::binary);
      save_policy(f, res.sac);
    }
    {
      std::ofstream f(dir / "rnet.ckpt", std::ios::binary);
      save_rnet(f, res.rnet);
    }
    {
      std::ofstream f(dir / "memory.ckpt", std::ios::binary);
      res.memory.save(f);
    }
    write_text_file(dir / "config.txt", render_config(cfg));
    if (!last_random_traj.empty()) {
      TrajectoryBuffer one(last_random_traj.size() + 1);
      one.add(last_random_traj);
      std::ostringstream os;
      write_trajectories(os, one);
      write_text_file(dir / "last_random_traj.txt", os.str());
    }
  }
  return res;
}

TrainResult run_ablation(const std::string& variant, RunConfig cfg,
                         const std::string& run_dir) {
  if (cfg.env != "pusher")
    throw std::invalid_argument("oracle ablations are defined on pusher");
  if (variant == "oracle-reward") {
    cfg.reward_mode = RewardMode::oracle;
    cfg.memory_mode = InsertMode::filtered;
  } else if (variant == "oracle-memory") {
    cfg.reward_mode = RewardMode::rnet;
    cfg.memory_mode = InsertMode::oracle;
  } else if (variant == "oracle") {
    cfg.reward_mode = RewardMode::oracle;
    cfg.memory_mode = InsertMode::oracle;
  } else {
    throw std::invalid_argument("unknown ablation variant: " + variant);
  }
  cfg.goal_source = GoalSource::memory;
  return train(cfg, run_dir);
}

}  // namespace reachrl
