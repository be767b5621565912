#pragma once

#include "reachrl/rnet.hpp"

namespace reachrl::testutil {

inline bool exact_eq(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}


// Model whose score is sigma(level) for every pair, regardless of input.
inline RNetModel constant_logit_model(int obs_dim, double level) {
  RNetModel m;
  m.embedder = Net::zeros(NetSpec{{obs_dim, 2}});
  m.comparator = Net::zeros(NetSpec{{4, 2, 1}});
  m.comparator.bias(1)[0] = level;
  m.tau_reach = 5;
  return m;
}

// Model over 2-d observations scoring roughly sigma(level) when the two
// inputs agree componentwise within `window`, and sigma(-level) otherwise.
// Built from paired saturated-tanh units: tanh(K(dx + w)) - tanh(K(dx - w))
// is ~2 inside the window and ~0 outside.
inline RNetModel window_model(double window, double level, double gain = 400.0) {
  RNetModel m;
  m.embedder = Net::zeros(NetSpec{{2, 2}});
  m.embedder.weight(0).setIdentity();

  m.comparator = Net::zeros(NetSpec{{4, 4, 1}});
  auto w = m.comparator.weight(0);  // 4 inputs (x0,x1,y0,y1) x 4 hidden
  auto b = m.comparator.bias(0);
  for (int d = 0; d < 2; ++d) {
    w(d, 2 * d) = gain;
    w(2 + d, 2 * d) = -gain;
    b[2 * d] = gain * window;
    w(d, 2 * d + 1) = gain;
    w(2 + d, 2 * d + 1) = -gain;
    b[2 * d + 1] = -gain * window;
  }
  auto v = m.comparator.weight(1);
  for (int d = 0; d < 2; ++d) {
    v(2 * d, 0) = level;
    v(2 * d + 1, 0) = -level;
  }
  // each matching dimension contributes ~2*level: logit is +level when both
  // components match, -level when one does, -3*level when none do
  m.comparator.bias(1)[0] = -3.0 * level;
  m.tau_reach = 5;
  return m;
}

inline Obs obs2(double x, double y) {
  Obs o(2);
  o << x, y;
  return o;
}

}  // namespace reachrl::testutil
