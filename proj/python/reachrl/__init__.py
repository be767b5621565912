"""Unsupervised goal-conditioned agent: reachability network, goal memory
and SAC policy, exposed from the C++ core."""

from ._reachrl import (
    EvalReport,
    GoalMemory,
    MazeEnv,
    MemoryGraph,
    PusherEnv,
    RNetModel,
    TrainResult,
    TrainStats,
    TrajectoryBuffer,
    build_graph,
    gradcheck,
    graph_distance,
    hand_distance,
    nearest_node,
    reachability_label,
    render_config,
    room_of,
    train,
)

__all__ = [
    "EvalReport",
    "GoalMemory",
    "MazeEnv",
    "MemoryGraph",
    "PusherEnv",
    "RNetModel",
    "TrainResult",
    "TrainStats",
    "TrajectoryBuffer",
    "build_graph",
    "gradcheck",
    "graph_distance",
    "hand_distance",
    "nearest_node",
    "reachability_label",
    "render_config",
    "room_of",
    "train",
]
