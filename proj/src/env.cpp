#include "reachrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reachrl {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Distance from point to an axis-aligned segment.
double point_segment_distance(double px, double py, const Wall& w) {
  double dx = w.x1 - w.x0, dy = w.y1 - w.y0;
  double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - w.x0) * dx + (py - w.y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  double cx = w.x0 + t * dx, cy = w.y0 + t * dy;
  return std::hypot(px - cx, py - cy);
}

// Earliest crossing parameter t in [0,1] of the motion segment p -> p+d
// against an axis-aligned wall, or a negative value when there is none.
double wall_hit_param(double px, double py, double dx, double dy,
                      const Wall& w) {
  if (w.x0 == w.x1) {  // vertical wall
    if (dx == 0.0) return -1.0;
    double t = (w.x0 - px) / dx;
    if (t < 0.0 || t > 1.0) return -1.0;
    double y = py + t * dy;
    double lo = std::min(w.y0, w.y1), hi = std::max(w.y0, w.y1);
    return (y >= lo && y <= hi) ? t : -1.0;
  }
  // horizontal wall
  if (dy == 0.0) return -1.0;
  double t = (w.y0 - py) / dy;
  if (t < 0.0 || t > 1.0) return -1.0;
  double x = px + t * dx;
  double lo = std::min(w.x0, w.x1), hi = std::max(w.x0, w.x1);
  return (x >= lo && x <= hi) ? t : -1.0;
}

}  // namespace

MazeLayout MazeLayout::four_rooms() {
  MazeLayout l;
  l.walls = {
      // outer boundary
      {0, 0, 1, 0},
      {0, 1, 1, 1},
      {0, 0, 0, 1},
      {1, 0, 1, 1},
      // horizontal divider y=0.5, door between R1 and R2 at x in [0.2,0.3]
      {0.0, 0.5, 0.2, 0.5},
      {0.3, 0.5, 0.5, 0.5},
      // horizontal divider y=0.5, door between R3 and R4 at x in [0.7,0.8]
      {0.5, 0.5, 0.7, 0.5},
      {0.8, 0.5, 1.0, 0.5},
      // vertical divider x=0.5 below, door between R2 and R3 at y in [0.2,0.3]
      {0.5, 0.0, 0.5, 0.2},
      {0.5, 0.3, 0.5, 0.5},
      // vertical divider x=0.5 above: solid, no door between R1 and R4
      {0.5, 0.5, 0.5, 1.0},
  };
  return l;
}

MazeLayout MazeLayout::open_arena() {
  MazeLayout l;
  l.walls = {{0, 0, 1, 0}, {0, 1, 1, 1}, {0, 0, 0, 1}, {1, 0, 1, 1}};
  return l;
}

MazeEnv::MazeEnv(MazeLayout layout) : layout_(std::move(layout)) {}

Obs MazeEnv::reset() {
  x_ = 0.1;
  y_ = 0.9;
  theta_ = 0.0;
  v_ = 0.0;
  return observe();
}

Obs MazeEnv::observe() const {
  Obs o(5);
  o << x_, y_, std::cos(theta_), std::sin(theta_), v_;
  return o;
}

void MazeEnv::set_state(const Obs& obs) {
  if (obs.size() != 5) throw std::invalid_argument("maze state needs 5 values");
  x_ = obs[0];
  y_ = obs[1];
  theta_ = std::atan2(obs[3], obs[2]);
  v_ = obs[4];
}

Obs MazeEnv::step(const Action& action) {
  double a0 = std::clamp(action[0], -1.0, 1.0);
  double a1 = std::clamp(action[1], -1.0, 1.0);
  theta_ += kTurnRate * a0;
  theta_ = std::remainder(theta_, 2.0 * std::numbers::pi);
  v_ = std::clamp(kDrag * v_ + kAccel * a1, -kVMax, kVMax);

  double dx = v_ * std::cos(theta_);
  double dy = v_ * std::sin(theta_);
  if (dx != 0.0 || dy != 0.0) {
    double t_hit = 2.0;
    for (const Wall& w : layout_.walls) {
      double t = wall_hit_param(x_, y_, dx, dy, w);
      if (t >= 0.0 && t < t_hit) t_hit = t;
    }
    if (t_hit <= 1.0) {
      double len = std::hypot(dx, dy);
      double back = kWallMargin / len;  // margin along the motion direction
      double t_stop = t_hit - back;
      if (t_stop > 0.0) {
        x_ += t_stop * dx;
        y_ += t_stop * dy;
      }
      v_ = 0.0;
    } else {
      x_ += dx;
      y_ += dy;
    }
  }
  return observe();
}

double MazeEnv::oracle_distance(const Obs& s, const Obs& g) const {
  if (s.size() != 5 || g.size() != 5)
    throw std::invalid_argument("maze oracle_distance: dimension mismatch");
  return std::hypot(s[0] - g[0], s[1] - g[1]);
}

bool MazeEnv::position_free(double x, double y, double margin) const {
  if (x < margin || x > 1.0 - margin || y < margin || y > 1.0 - margin)
    return false;
  for (const Wall& w : layout_.walls)
    if (point_segment_distance(x, y, w) < margin) return false;
  return true;
}

Obs MazeEnv::sample_eval_goal(Rng& rng) const {
  for (;;) {
    double x = rng.uniform();
    double y = rng.uniform();
    if (!position_free(x, y)) continue;
    Obs o(5);
    o << x, y, 1.0, 0.0, 0.0;
    return o;
  }
}

std::vector<std::string> MazeEnv::obs_names() const {
  return {"x", "y", "cos_th", "sin_th", "v"};
}

std::unique_ptr<Env> MazeEnv::clone() const {
  return std::make_unique<MazeEnv>(*this);
}

Obs PusherEnv::reset() {
  hx_ = 0.5;
  hy_ = 0.1;
  px_ = 0.5;
  py_ = 0.5;
  return observe();
}

Obs PusherEnv::observe() const {
  Obs o(4);
  o << hx_, hy_, px_, py_;
  return o;
}

void PusherEnv::set_state(const Obs& obs) {
  if (obs.size() != 4)
    throw std::invalid_argument("pusher state needs 4 values");
  hx_ = obs[0];
  hy_ = obs[1];
  px_ = obs[2];
  py_ = obs[3];
}

Obs PusherEnv::step(const Action& action) {
  constexpr double kContact = kHandRadius + kPuckRadius;
  double a0 = std::clamp(action[0], -1.0, 1.0);
  double a1 = std::clamp(action[1], -1.0, 1.0);
  double h0x = hx_, h0y = hy_;
  double h1x = clamp01(h0x + kHandStep * a0);
  double h1y = clamp01(h0y + kHandStep * a1);
  double mx = h1x - h0x, my = h1y - h0y;

  double end_dist = std::hypot(px_ - h1x, py_ - h1y);
  if (end_dist >= kContact) {
    hx_ = h1x;
    hy_ = h1y;
    return observe();
  }

  // Push direction from the first contact point along the hand's motion,
  // so a grazing hit never pulls the puck against the hand's direction.
  double nx, ny;
  double start_dist = std::hypot(px_ - h0x, py_ - h0y);
  if (start_dist < kContact) {
    if (start_dist > 1e-12) {
      nx = (px_ - h0x) / start_dist;
      ny = (py_ - h0y) / start_dist;
    } else if (mx != 0.0 || my != 0.0) {
      double ml = std::hypot(mx, my);
      nx = mx / ml;
      ny = my / ml;
    } else {
      return observe();
    }
  } else {
    // earliest root of |p - (h0 + t m)| = contact
    double rx = px_ - h0x, ry = py_ - h0y;
    double a = mx * mx + my * my;
    double b = -2.0 * (rx * mx + ry * my);
    double c = rx * rx + ry * ry - kContact * kContact;
    double disc = b * b - 4.0 * a * c;
    double t = (disc > 0.0 && a > 0.0) ? (-b - std::sqrt(disc)) / (2.0 * a)
                                       : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double cx = h0x + t * mx, cy = h0y + t * my;
    double d = std::hypot(px_ - cx, py_ - cy);
    nx = (px_ - cx) / d;
    ny = (py_ - cy) / d;
  }

  double depth = kContact - end_dist;
  // Clamp along the push line so displacement stays collinear with n.
  double scale = 1.0;
  auto limit = [&](double p, double n) {
    if (n > 0.0) scale = std::min(scale, (1.0 - p) / (depth * n));
    if (n < 0.0) scale = std::min(scale, (0.0 - p) / (depth * n));
  };
  limit(px_, nx);
  limit(py_, ny);
  scale = std::clamp(scale, 0.0, 1.0);
  double p1x = px_ + scale * depth * nx;
  double p1y = py_ + scale * depth * ny;

  // If the puck was blocked at a boundary the hand stops at contact instead
  // of sinking into it.
  if (std::hypot(p1x - h1x, p1y - h1y) < kContact - 1e-12) {
    double rx = p1x - h0x, ry = p1y - h0y;
    double a = mx * mx + my * my;
    double b = -2.0 * (rx * mx + ry * my);
    double c = rx * rx + ry * ry - kContact * kContact;
    double disc = b * b - 4.0 * a * c;
    if (a > 0.0 && disc >= 0.0) {
      double t1 = (-b - std::sqrt(disc)) / (2.0 * a);
      if (t1 >= 0.0) {
        t1 = std::min(t1, 1.0);
        h1x = h0x + t1 * mx;
        h1y = h0y + t1 * my;
      } else {
        h1x = h0x;
        h1y = h0y;
        p1x = px_;
        p1y = py_;
      }
    } else {
      h1x = h0x;
      h1y = h0y;
      p1x = px_;
      p1y = py_;
    }
  }

  hx_ = h1x;
  hy_ = h1y;
  px_ = p1x;
  py_ = p1y;
  return observe();
}

double PusherEnv::oracle_distance(const Obs& s, const Obs& g) const {
  if (s.size() != 4 || g.size() != 4)
    throw std::invalid_argument("pusher oracle_distance: dimension mismatch");
  return std::hypot(s[2] - g[2], s[3] - g[3]);
}

Obs PusherEnv::sample_eval_goal(Rng& rng) const {
  Obs o(4);
  o << rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform();
  return o;
}

std::vector<std::string> PusherEnv::obs_names() const {
  return {"hand_x", "hand_y", "puck_x", "puck_y"};
}

std::unique_ptr<Env> PusherEnv::clone() const {
  return std::make_unique<PusherEnv>(*this);
}

std::vector<Obs> Env::sample_eval_goals(int n, Rng& rng) const {
  if (n < 1) throw std::invalid_argument("sample_eval_goals: n must be >= 1");
  std::vector<Obs> goals;
  goals.reserve(n);
  for (int i = 0; i < n; ++i) goals.push_back(sample_eval_goal(rng));
  return goals;
}

double hand_distance(const Obs& s, const Obs& g) {
  if (s.size() != 4 || g.size() != 4)
    throw std::invalid_argument("hand_distance expects pusher observations");
  return std::hypot(s[0] - g[0], s[1] - g[1]);
}

int room_of(double x, double y) {
  if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
    throw std::invalid_argument("room_of: point out of bounds");
  bool right = x >= 0.5;
  bool top = y > 0.5;
  if (top) return right ? 4 : 1;
  return right ? 3 : 2;
}

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "maze") return std::make_unique<MazeEnv>();
  if (name == "pusher") return std::make_unique<PusherEnv>();
  throw std::invalid_argument("unknown env: " + name);
}

}  // namespace reachrl
