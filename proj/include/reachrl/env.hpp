#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "reachrl/rng.hpp"

namespace reachrl {

using Obs = Eigen::VectorXd;
using Action = Eigen::Vector2d;

enum class EnvKind { maze, pusher };

// Axis-aligned wall segment.
struct Wall {
  double x0, y0, x1, y1;
};

struct MazeLayout {
  std::vector<Wall> walls;

  // Four rooms on the unit square. Doors: R1-R2 at x in [0.2,0.3] on y=0.5,
  // R2-R3 at y in [0.2,0.3] on x=0.5, R3-R4 at x in [0.7,0.8] on y=0.5.
  // The R1-R4 divider (x=0.5, y in [0.5,1]) is solid.
  static MazeLayout four_rooms();

  // Boundary walls only.
  static MazeLayout open_arena();
};

class Env {
 public:
  virtual ~Env() = default;
  virtual EnvKind kind() const = 0;
  virtual int obs_dim() const = 0;
  virtual Obs reset() = 0;
  virtual Obs step(const Action& action) = 0;
  virtual Obs observe() const = 0;
  virtual void set_state(const Obs& obs) = 0;
  virtual double oracle_distance(const Obs& s, const Obs& g) const = 0;
  virtual Obs sample_eval_goal(Rng& rng) const = 0;
  virtual std::vector<std::string> obs_names() const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;

  std::vector<Obs> sample_eval_goals(int n, Rng& rng) const;
};

// Point agent with heading and speed; observation (x, y, cos, sin, v).
class MazeEnv : public Env {
 public:
  static constexpr double kTurnRate = 0.3;
  static constexpr double kAccel = 0.02;
  static constexpr double kDrag = 0.9;
  static constexpr double kVMax = 0.05;
  static constexpr double kWallMargin = 1e-3;

  explicit MazeEnv(MazeLayout layout = MazeLayout::four_rooms());

  EnvKind kind() const override { return EnvKind::maze; }
  int obs_dim() const override { return 5; }
  Obs reset() override;
  Obs step(const Action& action) override;
  Obs observe() const override;
  void set_state(const Obs& obs) override;
  double oracle_distance(const Obs& s, const Obs& g) const override;
  Obs sample_eval_goal(Rng& rng) const override;
  std::vector<std::string> obs_names() const override;
  std::unique_ptr<Env> clone() const override;

  const MazeLayout& layout() const { return layout_; }
  bool position_free(double x, double y, double margin = kWallMargin) const;

 private:
  MazeLayout layout_;
  double x_ = 0.1, y_ = 0.9, theta_ = 0.0, v_ = 0.0;
};

// Planar disk pusher; observation (hand_x, hand_y, puck_x, puck_y).
class PusherEnv : public Env {
 public:
  static constexpr double kHandRadius = 0.04;
  static constexpr double kPuckRadius = 0.05;
  static constexpr double kHandStep = 0.05;

  EnvKind kind() const override { return EnvKind::pusher; }
  int obs_dim() const override { return 4; }
  Obs reset() override;
  Obs step(const Action& action) override;
  Obs observe() const override;
  void set_state(const Obs& obs) override;
  double oracle_distance(const Obs& s, const Obs& g) const override;
  Obs sample_eval_goal(Rng& rng) const override;
  std::vector<std::string> obs_names() const override;
  std::unique_ptr<Env> clone() const override;

 private:
  double hx_ = 0.5, hy_ = 0.1, px_ = 0.5, py_ = 0.5;
};

// Euclidean distance between the hand components of pusher observations.
double hand_distance(const Obs& s, const Obs& g);

// Room index 1..4 for a point inside the unit square. The room grid is
// half-open when read from the start corner: x = 0.5 falls in the right
// column, y = 0.5 in the bottom row.
int room_of(double x, double y);

std::unique_ptr<Env> make_env(const std::string& name);

}  // namespace reachrl
