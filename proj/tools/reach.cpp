#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "reachrl/config.hpp"
#include "reachrl/curve.hpp"
#include "reachrl/gradcheck.hpp"
#include "reachrl/trainer.hpp"

namespace fs = std::filesystem;
using namespace reachrl;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

void apply_seed_env(RunConfig& cfg) {
  if (const char* seed = std::getenv("REACH_SEED")) {
    apply_override(cfg, std::string("seed=") + seed);
  }
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  RunConfig cfg = parse_config_file(path);
  for (const auto& assignment : overrides) {
    try {
      apply_override(cfg, assignment);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (override '" + assignment +
                        "')");
    }
  }
  apply_seed_env(cfg);
  validate_config(cfg);
  return cfg;
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path, overrides);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  fs::path run_dir = fs::path(cfg.out_dir) /
                     (variant_token(cfg) + "-seed" + std::to_string(cfg.seed));
  TrainResult res = train(cfg, run_dir.string());
  std::cout << "run_dir " << run_dir.string() << "\n";
  std::cout << "episodes " << res.stats.episodes << "\n";
  std::cout << "final_eval_mean " << res.curve.back().mean << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& config_path,
             std::string per_goal_path) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path, {});
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  auto env = make_env(cfg.env);
  SACConfig scfg;
  scfg.obs_dim = env->obs_dim();
  scfg.goal_dim = env->obs_dim();
  scfg.action_dim = 2;
  scfg.hidden = cfg.hidden_dim;
  std::ifstream f(checkpoint, std::ios::binary);
  if (!f) {
    std::cerr << "cannot open checkpoint: " << checkpoint << "\n";
    return kExitConfig;
  }
  SAC sac;
  try {
    sac = load_policy(f, scfg);
  } catch (const std::exception& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitConfig;
  }

  Rng rng = sub_rng(cfg.seed, "eval-goals");
  auto goals = env->sample_eval_goals(cfg.eval_goal_count, rng);
  EvalReport report =
      evaluate(sac, *env, goals, cfg.resolved_policy_phase_len());

  char buf[128];
  auto emit = [&buf](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    std::cout << key << ' ' << buf << "\n";
  };
  emit("mean", report.mean);
  emit("std", report.stddev);
  emit("success", report.success_rate);
  if (env->kind() == EnvKind::maze) {
    emit("success_room1", report.room_success[0]);
    emit("success_room2", report.room_success[1]);
    emit("success_room3", report.room_success[2]);
    emit("success_room4", report.room_success[3]);
  } else {
    emit("hand_distance_mean", report.hand_mean);
  }

  if (env->kind() == EnvKind::maze) {
    if (per_goal_path.empty())
      per_goal_path =
          (fs::path(checkpoint).parent_path() / "per_goal.txt").string();
    std::ofstream pg(per_goal_path, std::ios::binary);
    if (!pg) {
      std::cerr << "cannot write " << per_goal_path << "\n";
      return kExitRuntime;
    }
    pg << "goal_x goal_y final_distance\n";
    for (std::size_t i = 0; i < goals.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", goals[i][0],
                    goals[i][1], report.final_distances[i]);
      pg << buf << "\n";
    }
  }
  return 0;
}

int cmd_aggregate(const std::vector<std::string>& run_dirs,
                  const std::string& out_path) {
  std::vector<RunCurve> runs;
  for (const auto& dir : run_dirs) {
    fs::path p(dir);
    std::string base = p.filename().string();
    if (base.empty()) base = p.parent_path().filename().string();
    std::size_t sep = base.rfind("-seed");
    if (sep == std::string::npos) {
      std::cerr << "run dir '" << dir
                << "' is not tagged <variant>-seed<N>\n";
      return kExitConfig;
    }
    RunCurve run;
    run.variant = base.substr(0, sep);
    run.label = dir;
    std::ifstream f(p / "curve.txt");
    if (!f) {
      std::cerr << "missing curve.txt in " << dir << "\n";
      return kExitConfig;
    }
    run.rows = read_curve_fragment(f);
    runs.push_back(std::move(run));
  }
  std::string table = aggregate_curves(runs);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    return kExitRuntime;
  }
  out << table;
  return 0;
}

int cmd_dump_memory(const std::string& checkpoint, const std::string& out) {
  std::ifstream f(checkpoint, std::ios::binary);
  if (!f) {
    std::cerr << "cannot open memory checkpoint: " << checkpoint << "\n";
    return kExitConfig;
  }
  GoalMemory mem = GoalMemory::load(f);
  std::vector<std::string> names;
  int dim = mem.size() > 0 ? static_cast<int>(mem.entry(0).size()) : 0;
  if (dim == 5)
    names = MazeEnv().obs_names();
  else if (dim == 4)
    names = PusherEnv().obs_names();
  else
    for (int i = 0; i < dim; ++i) names.push_back("o" + std::to_string(i));
  if (out.empty()) {
    mem.write_dump(std::cout, names);
  } else {
    std::ofstream os(out, std::ios::binary);
    mem.write_dump(os, names);
  }
  return 0;
}

int cmd_dump_embeddings(const std::string& checkpoint, int n_points,
                        const std::string& out, std::uint64_t seed) {
  std::ifstream f(checkpoint, std::ios::binary);
  if (!f) {
    std::cerr << "cannot open rnet checkpoint: " << checkpoint << "\n";
    return kExitConfig;
  }
  RNetModel model = load_rnet(f);
  if (model.embedder.spec().input_size() != 5) {
    std::cerr << "dump-embeddings needs a maze rnet checkpoint\n";
    return kExitConfig;
  }
  MazeEnv env;
  Rng rng = sub_rng(seed, "embedding-points");
  MatrixXd emb(n_points, model.embedding_dim());
  std::vector<Obs> points;
  for (int i = 0; i < n_points; ++i) {
    Obs o = env.sample_eval_goal(rng);
    points.push_back(o);
    emb.row(i) = rnet_embed(model, o).transpose();
  }
  Pca2d pca = pca_2d(emb);

  std::ostringstream os;
  os << "x y pc1 pc2 room\n";
  char buf[128];
  for (int i = 0; i < n_points; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g", points[i][0],
                  points[i][1], pca.projections(i, 0), pca.projections(i, 1));
    os << buf << ' ' << room_of(points[i][0], points[i][1]) << "\n";
  }
  if (out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream of(out, std::ios::binary);
    of << os.str();
  }
  return 0;
}

int cmd_gradcheck(int draws, bool corrupt) {
  auto results = run_gradient_checks(draws, 20240801, corrupt);
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-12s draws=%d max_rel_err=%.3g\n", r.family.c_str(), r.draws,
                r.max_rel_err);
    ok = ok && r.max_rel_err < 1e-4;
  }
  if (!ok) {
    for (const auto& r : results)
      if (r.max_rel_err >= 1e-4)
        std::printf("FAILED %s (%.3g >= 1e-4)\n", r.family.c_str(),
                    r.max_rel_err);
  }
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unsupervised goal-conditioned agent trainer"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, out_path, per_goal_path;
  std::vector<std::string> overrides, run_dirs;
  int n_points = 1000;
  int draws = 20;
  std::uint64_t seed = 0;
  bool corrupt = false;

  auto* train_cmd = app.add_subcommand("train", "train a policy from a config");
  train_cmd->add_option("config", config_path, "config file")->required();
  train_cmd->add_option("overrides", overrides, "key=value overrides");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a policy checkpoint");
  eval_cmd->add_option("checkpoint", checkpoint, "policy.ckpt")->required();
  eval_cmd->add_option("config", config_path, "config file")->required();
  eval_cmd->add_option("--per-goal", per_goal_path, "per-goal distances file");

  auto* agg_cmd = app.add_subcommand("aggregate", "merge run curves");
  agg_cmd->add_option("--out", out_path, "output curve file")->required();
  agg_cmd->add_option("run_dirs", run_dirs, "run directories")->required();

  auto* dm_cmd = app.add_subcommand("dump-memory", "dump a memory checkpoint");
  dm_cmd->add_option("checkpoint", checkpoint, "memory.ckpt")->required();
  dm_cmd->add_option("--out", out_path, "output file (default stdout)");

  auto* de_cmd =
      app.add_subcommand("dump-embeddings", "embedding PCA of maze points");
  de_cmd->add_option("checkpoint", checkpoint, "rnet.ckpt")->required();
  de_cmd->add_option("n_points", n_points, "number of sampled points");
  de_cmd->add_option("--out", out_path, "output file (default stdout)");
  de_cmd->add_option("--seed", seed, "sampling seed");

  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference checks");
  gc_cmd->add_option("--draws", draws, "random draws per loss family");
  gc_cmd->add_flag("--corrupt", corrupt,
                   "corrupt one gradient (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(config_path, overrides);
    if (eval_cmd->parsed())
      return cmd_eval(checkpoint, config_path, per_goal_path);
    if (agg_cmd->parsed()) return cmd_aggregate(run_dirs, out_path);
    if (dm_cmd->parsed()) return cmd_dump_memory(checkpoint, out_path);
    if (de_cmd->parsed())
      return cmd_dump_embeddings(checkpoint, n_points, out_path, seed);
    if (gc_cmd->parsed()) return cmd_gradcheck(draws, corrupt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
