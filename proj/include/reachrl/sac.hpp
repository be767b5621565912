#pragma once

#include <iosfwd>

#include "reachrl/net.hpp"

namespace reachrl {

struct Transition {
  VectorXd s, g, a;
  double r = 0.0;
  VectorXd s2;
  bool done = false;
};

// Ring buffer with uniform with-replacement sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1000000) : capacity_(capacity) {}

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  void push(Transition t);
  const Transition& at(std::size_t i) const { return data_[i]; }
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t write_ = 0;
  std::vector<Transition> data_;
};

struct SACConfig {
  int obs_dim = 0;
  int goal_dim = 0;
  int action_dim = 2;
  int hidden = 32;
  double gamma = 0.99;
  double polyak = 0.995;
  double lr = 3e-4;
  int batch = 256;
  std::size_t replay_capacity = 1000000;
  double entropy_target = 0.0;  // 0 resolves to -action_dim
  double logstd_min = -5.0;
  double logstd_max = 2.0;

  double resolved_entropy_target() const {
    return entropy_target != 0.0 ? entropy_target
                                 : -static_cast<double>(action_dim);
  }
};

// Soft actor-critic state: squashed-Gaussian actor, twin critics with
// polyak-averaged targets, exp-parameterised temperature.
struct SAC {
  SACConfig cfg;
  Net actor;  // s||g -> [mean, logstd] (2 * action_dim)
  Net critic1, critic2, target1, target2;  // s||g||a -> 1
  double log_temp = 0.0;
  AdamState adam_actor, adam_critic1, adam_critic2;
  AdamState adam_temp;
  ReplayBuffer replay;

  static SAC init(const SACConfig& cfg, Rng& rng);
};

// Reparameterised sample: u ~ N(mean, std), action = tanh(u); log_prob
// includes the tanh change of variables.
std::pair<VectorXd, double> actor_sample(const SAC& sac, const VectorXd& s,
                                         const VectorXd& g, Rng& rng);

VectorXd actor_mean(const SAC& sac, const VectorXd& s, const VectorXd& g);

// Deterministic actions for many s||g rows at once.
MatrixXd actor_mean_batch(const SAC& sac, const MatrixXd& sg_rows);

struct SACUpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double temp_loss = 0.0;
  double alpha = 0.0;
  double mean_log_prob = 0.0;
};

SACUpdateStats sac_update(SAC& sac,
                          const std::vector<const Transition*>& batch,
                          Rng& rng);

// --- pieces exposed for finite-difference validation ---

// y = r + gamma * (1 - done) * (min target Q - alpha * log pi), with the
// next action derived from the given noise matrix.
VectorXd critic_targets(const SAC& sac,
                        const std::vector<const Transition*>& batch,
                        const MatrixXd& noise);

// mean squared error of one critic against fixed targets
double critic_loss_grad(const Net& critic, const MatrixXd& sga,
                        const VectorXd& targets, VectorXd& grad);

// mean(alpha * log pi - min Q) with reparameterised actions from `noise`
double actor_loss_grad(const SAC& sac, const MatrixXd& sg,
                       const MatrixXd& noise, double alpha, VectorXd& grad,
                       double* mean_log_prob);

double temperature_loss(double log_temp, double mean_log_prob,
                        double entropy_target);
double temperature_grad(double log_temp, double mean_log_prob,
                        double entropy_target);

void save_policy(std::ostream& os, const SAC& sac);
SAC load_policy(std::istream& is, const SACConfig& cfg);

}  // namespace reachrl
