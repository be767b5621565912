#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "reachrl/config.hpp"
#include "reachrl/gradcheck.hpp"
#include "reachrl/trainer.hpp"

namespace py = pybind11;
using namespace reachrl;

namespace {

RunConfig config_from_dict(const py::dict& d) {
  RunConfig cfg;
  for (auto item : d) {
    std::string key = py::str(item.first);
    std::string value = py::str(item.second);
    apply_override(cfg, key + "=" + value);
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_reachrl, m) {
  m.doc() = "unsupervised goal-conditioned agent: reachability network, goal "
            "memory and SAC policy";

  py::class_<MazeEnv>(m, "MazeEnv")
      .def(py::init<>())
      .def_static("open_arena",
                  [] { return MazeEnv(MazeLayout::open_arena()); })
      .def("reset", &MazeEnv::reset)
      .def("step",
           [](MazeEnv& env, double a0, double a1) {
             return env.step(Action(a0, a1));
           })
      .def("observe", &MazeEnv::observe)
      .def("set_state", &MazeEnv::set_state)
      .def("oracle_distance", &MazeEnv::oracle_distance)
      .def("position_free",
           [](const MazeEnv& env, double x, double y) {
             return env.position_free(x, y);
           })
      .def("sample_eval_goals", [](const MazeEnv& env, int n,
                                   std::uint64_t seed) {
        Rng rng(seed);
        return env.sample_eval_goals(n, rng);
      });

  py::class_<PusherEnv>(m, "PusherEnv")
      .def(py::init<>())
      .def("reset", &PusherEnv::reset)
      .def("step",
           [](PusherEnv& env, double a0, double a1) {
             return env.step(Action(a0, a1));
           })
      .def("observe", &PusherEnv::observe)
      .def("set_state", &PusherEnv::set_state)
      .def("oracle_distance", &PusherEnv::oracle_distance)
      .def("sample_eval_goals", [](const PusherEnv& env, int n,
                                   std::uint64_t seed) {
        Rng rng(seed);
        return env.sample_eval_goals(n, rng);
      });

  m.def("room_of", &room_of, py::arg("x"), py::arg("y"));
  m.def("hand_distance", &hand_distance);

  py::class_<TrajectoryBuffer>(m, "TrajectoryBuffer")
      .def(py::init<std::size_t>(), py::arg("step_capacity") = 200000)
      .def("add", &TrajectoryBuffer::add)
      .def_property_readonly("num_trajectories",
                             &TrajectoryBuffer::num_trajectories)
      .def_property_readonly("total_steps", &TrajectoryBuffer::total_steps);

  m.def("reachability_label", &reachability_label, py::arg("traj_a"),
        py::arg("traj_b"), py::arg("i"), py::arg("j"), py::arg("tau_reach"));

  py::class_<RNetModel>(m, "RNetModel")
      .def_static("init",
                  [](int obs_dim, int tau_reach, std::uint64_t seed) {
                    Rng rng(seed);
                    return RNetModel::init(obs_dim, tau_reach, rng);
                  },
                  py::arg("obs_dim"), py::arg("tau_reach") = 5,
                  py::arg("seed") = 0)
      .def_readonly("tau_reach", &RNetModel::tau_reach)
      .def("logit", &rnet_logit)
      .def("score", &rnet_score)
      .def("distance", &rnet_distance)
      .def("embed", &rnet_embed)
      .def("train",
           [](RNetModel& model, const TrajectoryBuffer& buffer, int steps,
              int batch_size, double lr, std::uint64_t seed) {
             RNetOptimizer opt = RNetOptimizer::for_model(model, lr);
             Rng rng(seed);
             RNetTrainStats stats =
                 rnet_train(model, buffer, steps, batch_size, opt, rng);
             py::dict out;
             out["probe_accuracy"] = stats.probe_accuracy;
             out["mean_loss_per_100"] = stats.mean_loss_per_100;
             return out;
           },
           py::arg("buffer"), py::arg("steps"), py::arg("batch_size") = 128,
           py::arg("lr") = 1e-3, py::arg("seed") = 0);

  py::class_<GoalMemory>(m, "GoalMemory")
      .def(py::init([](const std::string& mode, double tau_memory, int k_max) {
             return GoalMemory(mode == "weighted" ? MemoryMode::weighted
                                                  : MemoryMode::filtered,
                               tau_memory, k_max);
           }),
           py::arg("mode") = "filtered", py::arg("tau_memory") = 0.5,
           py::arg("k_max") = 5)
      .def_property_readonly("size", &GoalMemory::size)
      .def("entry", &GoalMemory::entry)
      .def("weight", &GoalMemory::weight)
      .def("force_insert", &GoalMemory::force_insert)
      .def("try_insert", &GoalMemory::try_insert)
      .def("sample_goal",
           [](const GoalMemory& mem, std::uint64_t seed) {
             Rng rng(seed);
             return mem.sample_goal(rng);
           },
           py::arg("seed") = 0);

  py::class_<MemoryGraph>(m, "MemoryGraph")
      .def_readonly("nodes", &MemoryGraph::nodes)
      .def("edge", &MemoryGraph::edge)
      .def("dist", [](const MemoryGraph& g, int i, int j) {
        return g.dist(i, j);
      });

  m.def("build_graph", &build_graph);
  m.def("nearest_node", &nearest_node);
  m.def("graph_distance", &graph_distance);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("step", &EvalReport::step)
      .def_readonly("mean", &EvalReport::mean)
      .def_readonly("std", &EvalReport::stddev)
      .def_readonly("success_rate", &EvalReport::success_rate)
      .def_readonly("room_success", &EvalReport::room_success)
      .def_readonly("hand_mean", &EvalReport::hand_mean)
      .def_readonly("final_distances", &EvalReport::final_distances);

  py::class_<TrainStats>(m, "TrainStats")
      .def_readonly("episodes", &TrainStats::episodes)
      .def_readonly("policy_steps", &TrainStats::policy_steps)
      .def_readonly("rnet_reward_calls", &TrainStats::rnet_reward_calls)
      .def_readonly("rnet_insert_calls", &TrainStats::rnet_insert_calls)
      .def_readonly("rnet_trainings", &TrainStats::rnet_trainings);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("curve", &TrainResult::curve)
      .def_readonly("stats", &TrainResult::stats)
      .def_property_readonly("memory_size", [](const TrainResult& r) {
        return r.memory.size();
      });

  m.def(
      "train",
      [](const py::dict& config, const std::string& run_dir) {
        RunConfig cfg = config_from_dict(config);
        validate_config(cfg);
        py::gil_scoped_release release;
        return train(cfg, run_dir);
      },
      py::arg("config"), py::arg("run_dir") = "");

  m.def("render_config", [](const py::dict& config) {
    return render_config(config_from_dict(config));
  });

  m.def(
      "gradcheck",
      [](int draws, std::uint64_t seed) {
        py::dict out;
        for (const auto& r : run_gradient_checks(draws, seed))
          out[py::str(r.family)] = r.max_rel_err;
        return out;
      },
      py::arg("draws") = 20, py::arg("seed") = 0);
}
