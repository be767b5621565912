#include "reachrl/sac.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace reachrl {

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[write_] = std::move(t);
  }
  write_ = (write_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n,
                                                    Rng& rng) const {
  if (data_.size() < n)
    throw std::runtime_error("replay buffer smaller than requested batch");
  std::vector<const Transition*> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = &data_[rng.uniform_index(data_.size())];
  return out;
}

SAC SAC::init(const SACConfig& cfg, Rng& rng) {
  if (cfg.obs_dim < 1 || cfg.goal_dim < 1 || cfg.action_dim < 1)
    throw std::invalid_argument("SACConfig dimensions must be positive");
  SAC sac;
  sac.cfg = cfg;
  int in = cfg.obs_dim + cfg.goal_dim;
  sac.actor = Net(NetSpec{{in, cfg.hidden, cfg.hidden, 2 * cfg.action_dim}}, rng);
  // near-stationary initial policy: scale down the output layer
  {
    int L = sac.actor.spec().num_layers() - 1;
    sac.actor.weight(L) *= 0.01;
  }
  NetSpec critic_spec{{in + cfg.action_dim, cfg.hidden, cfg.hidden, 1}};
  sac.critic1 = Net(critic_spec, rng);
  sac.critic2 = Net(critic_spec, rng);
  sac.target1 = sac.critic1;
  sac.target2 = sac.critic2;
  sac.log_temp = 0.0;
  sac.adam_actor = AdamState::for_params(sac.actor.param_count(), cfg.lr);
  sac.adam_critic1 = AdamState::for_params(sac.critic1.param_count(), cfg.lr);
  sac.adam_critic2 = AdamState::for_params(sac.critic2.param_count(), cfg.lr);
  sac.adam_temp = AdamState::for_params(1, cfg.lr);
  sac.replay = ReplayBuffer(cfg.replay_capacity);
  return sac;
}

namespace {

// log(1 - tanh(u)^2), stable for large |u|
double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::log(2.0) - u - softplus(-2.0 * u));
}

struct ActorHeads {
  MatrixXd mean, logstd, std;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> clamped;
};

void split_heads(const SACConfig& cfg, const MatrixXd& raw, ActorHeads& h) {
  int A = cfg.action_dim;
  h.mean = raw.leftCols(A);
  h.logstd = raw.rightCols(A);
  h.clamped = (h.logstd.array() < cfg.logstd_min) ||
              (h.logstd.array() > cfg.logstd_max);
  h.logstd = h.logstd.array().min(cfg.logstd_max).max(cfg.logstd_min).matrix();
  h.std = h.logstd.array().exp().matrix();
}

// Per-row log pi of actions tanh(mean + std*noise).
VectorXd squashed_log_prob(const ActorHeads& h, const MatrixXd& noise,
                           const MatrixXd& u) {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)
  VectorXd logp = VectorXd::Zero(u.rows());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index d = 0; d < u.cols(); ++d) {
      acc += -0.5 * noise(i, d) * noise(i, d) - h.logstd(i, d) - kHalfLog2Pi;
      acc -= log_one_minus_tanh_sq(u(i, d));
    }
    logp[i] = acc;
  }
  return logp;
}

MatrixXd concat_cols(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

}  // namespace

std::pair<VectorXd, double> actor_sample(const SAC& sac, const VectorXd& s,
                                         const VectorXd& g, Rng& rng) {
  MatrixXd sg(1, s.size() + g.size());
  sg << s.transpose(), g.transpose();
  MatrixXd raw = sac.actor.forward_batch(sg);
  ActorHeads h;
  split_heads(sac.cfg, raw, h);
  MatrixXd noise(1, sac.cfg.action_dim);
  for (int d = 0; d < sac.cfg.action_dim; ++d) noise(0, d) = rng.normal();
  MatrixXd u = h.mean + h.std.cwiseProduct(noise);
  VectorXd logp = squashed_log_prob(h, noise, u);
  VectorXd action = u.row(0).transpose().array().tanh().matrix();
  return {action, logp[0]};
}

VectorXd actor_mean(const SAC& sac, const VectorXd& s, const VectorXd& g) {
  MatrixXd sg(1, s.size() + g.size());
  sg << s.transpose(), g.transpose();
  return actor_mean_batch(sac, sg).row(0).transpose();
}

MatrixXd actor_mean_batch(const SAC& sac, const MatrixXd& sg_rows) {
  MatrixXd raw = sac.actor.forward_batch(sg_rows);
  return raw.leftCols(sac.cfg.action_dim).array().tanh().matrix();
}

VectorXd critic_targets(const SAC& sac,
                        const std::vector<const Transition*>& batch,
                        const MatrixXd& noise) {
  int B = static_cast<int>(batch.size());
  int in = sac.cfg.obs_dim + sac.cfg.goal_dim;
  MatrixXd s2g(B, in);
  for (int i = 0; i < B; ++i)
    s2g.row(i) << batch[i]->s2.transpose(), batch[i]->g.transpose();
  MatrixXd raw = sac.actor.forward_batch(s2g);
  ActorHeads h;
  split_heads(sac.cfg, raw, h);
  MatrixXd u = h.mean + h.std.cwiseProduct(noise);
  VectorXd logp = squashed_log_prob(h, noise, u);
  MatrixXd a2 = u.array().tanh().matrix();
  MatrixXd s2ga = concat_cols(s2g, a2);
  VectorXd q1 = sac.target1.forward_batch(s2ga).col(0);
  VectorXd q2 = sac.target2.forward_batch(s2ga).col(0);
  double alpha = std::exp(sac.log_temp);
  VectorXd y(B);
  for (int i = 0; i < B; ++i) {
    double not_done = batch[i]->done ? 0.0 : 1.0;
    double soft_q = std::min(q1[i], q2[i]) - alpha * logp[i];
    y[i] = batch[i]->r + sac.cfg.gamma * not_done * soft_q;
  }
  return y;
}

double critic_loss_grad(const Net& critic, const MatrixXd& sga,
                        const VectorXd& targets, VectorXd& grad) {
  Net::Cache cache;
  VectorXd q = critic.forward_batch(sga, cache).col(0);
  VectorXd err = q - targets;
  double B = static_cast<double>(q.size());
  double loss = err.squaredNorm() / B;
  MatrixXd dq = (2.0 / B) * err;
  critic.backward(cache, dq, grad);
  return loss;
}

double actor_loss_grad(const SAC& sac, const MatrixXd& sg,
                       const MatrixXd& noise, double alpha, VectorXd& grad,
                       double* mean_log_prob) {
  int B = static_cast<int>(sg.rows());
  int A = sac.cfg.action_dim;
  Net::Cache actor_cache;
  MatrixXd raw = sac.actor.forward_batch(sg, actor_cache);
  ActorHeads h;
  split_heads(sac.cfg, raw, h);
  MatrixXd u = h.mean + h.std.cwiseProduct(noise);
  MatrixXd a = u.array().tanh().matrix();
  VectorXd logp = squashed_log_prob(h, noise, u);

  MatrixXd sga = concat_cols(sg, a);
  Net::Cache c1_cache, c2_cache;
  VectorXd q1 = sac.critic1.forward_batch(sga, c1_cache).col(0);
  VectorXd q2 = sac.critic2.forward_batch(sga, c2_cache).col(0);

  double bsz = static_cast<double>(B);
  double loss = 0.0;
  for (int i = 0; i < B; ++i)
    loss += alpha * logp[i] - std::min(q1[i], q2[i]);
  loss /= bsz;
  if (mean_log_prob) *mean_log_prob = logp.mean();

  // dLoss/da through the minimum critic
  MatrixXd dq1 = MatrixXd::Zero(B, 1), dq2 = MatrixXd::Zero(B, 1);
  for (int i = 0; i < B; ++i)
    (q1[i] <= q2[i] ? dq1 : dq2)(i, 0) = -1.0 / bsz;
  VectorXd scratch1 = VectorXd::Zero(sac.critic1.param_count());
  VectorXd scratch2 = VectorXd::Zero(sac.critic2.param_count());
  MatrixXd dx1 = sac.critic1.backward(c1_cache, dq1, scratch1, true);
  MatrixXd dx2 = sac.critic2.backward(c2_cache, dq2, scratch2, true);
  MatrixXd da = dx1.rightCols(A) + dx2.rightCols(A);

  // dLoss/du = alpha/B * 2*tanh(u) + dLoss/da * (1 - tanh(u)^2)
  MatrixXd du = ((alpha / bsz) * 2.0 * a.array() +
                 da.array() * (1.0 - a.array().square()))
                    .matrix();
  MatrixXd dmean = du;
  MatrixXd dlogstd =
      (du.array() * h.std.array() * noise.array() - alpha / bsz).matrix();
  // clamped head entries pass no gradient
  dlogstd = h.clamped.select(Eigen::ArrayXXd::Zero(B, A), dlogstd.array()).matrix();

  MatrixXd draw(B, 2 * A);
  draw.leftCols(A) = dmean;
  draw.rightCols(A) = dlogstd;
  sac.actor.backward(actor_cache, draw, grad);
  return loss;
}

double temperature_loss(double log_temp, double mean_log_prob,
                        double entropy_target) {
  return -std::exp(log_temp) * (mean_log_prob + entropy_target);
}

double temperature_grad(double log_temp, double mean_log_prob,
                        double entropy_target) {
  return -std::exp(log_temp) * (mean_log_prob + entropy_target);
}

SACUpdateStats sac_update(SAC& sac,
                          const std::vector<const Transition*>& batch,
                          Rng& rng) {
  int B = static_cast<int>(batch.size());
  if (B < 2) throw std::invalid_argument("sac_update needs batch size >= 2");
  int A = sac.cfg.action_dim;
  int in = sac.cfg.obs_dim + sac.cfg.goal_dim;

  MatrixXd sg(B, in), sga(B, in + A);
  for (int i = 0; i < B; ++i) {
    sg.row(i) << batch[i]->s.transpose(), batch[i]->g.transpose();
    sga.row(i) << sg.row(i), batch[i]->a.transpose();
  }

  MatrixXd noise1(B, A);
  for (int i = 0; i < B; ++i)
    for (int d = 0; d < A; ++d) noise1(i, d) = rng.normal();
  VectorXd y = critic_targets(sac, batch, noise1);

  SACUpdateStats stats;
  VectorXd gc1 = VectorXd::Zero(sac.critic1.param_count());
  VectorXd gc2 = VectorXd::Zero(sac.critic2.param_count());
  double l1 = critic_loss_grad(sac.critic1, sga, y, gc1);
  double l2 = critic_loss_grad(sac.critic2, sga, y, gc2);
  stats.critic_loss = l1 + l2;
  adam_step(sac.critic1.params(), gc1, sac.adam_critic1);
  adam_step(sac.critic2.params(), gc2, sac.adam_critic2);

  MatrixXd noise2(B, A);
  for (int i = 0; i < B; ++i)
    for (int d = 0; d < A; ++d) noise2(i, d) = rng.normal();
  double alpha = std::exp(sac.log_temp);
  stats.alpha = alpha;
  VectorXd ga = VectorXd::Zero(sac.actor.param_count());
  stats.actor_loss =
      actor_loss_grad(sac, sg, noise2, alpha, ga, &stats.mean_log_prob);
  adam_step(sac.actor.params(), ga, sac.adam_actor);

  double target_h = sac.cfg.resolved_entropy_target();
  stats.temp_loss = temperature_loss(sac.log_temp, stats.mean_log_prob, target_h);
  VectorXd lt(1), gt(1);
  lt[0] = sac.log_temp;
  gt[0] = temperature_grad(sac.log_temp, stats.mean_log_prob, target_h);
  adam_step(lt, gt, sac.adam_temp);
  sac.log_temp = lt[0];

  double rho = sac.cfg.polyak;
  sac.target1.params() =
      rho * sac.target1.params() + (1.0 - rho) * sac.critic1.params();
  sac.target2.params() =
      rho * sac.target2.params() + (1.0 - rho) * sac.critic2.params();

  if (!std::isfinite(stats.critic_loss) || !std::isfinite(stats.actor_loss) ||
      !std::isfinite(stats.temp_loss)) {
    std::ostringstream msg;
    msg << "sac_update produced non-finite loss (critic=" << stats.critic_loss
        << " actor=" << stats.actor_loss << " temp=" << stats.temp_loss
        << " alpha=" << stats.alpha << ")";
    throw std::runtime_error(msg.str());
  }
  return stats;
}

static const char* kPolicyHeader = "reachrl-policy-v1";

void save_policy(std::ostream& os, const SAC& sac) {
  os << kPolicyHeader << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", sac.log_temp);
  os << "log_temperature " << buf << "\n";
  save_net(os, sac.actor);
  save_net(os, sac.critic1);
  save_net(os, sac.critic2);
  save_net(os, sac.target1);
  save_net(os, sac.target2);
}

SAC load_policy(std::istream& is, const SACConfig& cfg) {
  is >> std::ws;
  std::string header;
  if (!std::getline(is, header) || header != kPolicyHeader)
    throw std::runtime_error("bad policy checkpoint header");
  std::string key;
  double log_temp;
  is >> key >> log_temp;
  if (!is || key != "log_temperature")
    throw std::runtime_error("bad policy checkpoint log_temperature");
  SAC sac;
  sac.cfg = cfg;
  sac.log_temp = log_temp;
  sac.actor = load_net(is);
  sac.critic1 = load_net(is);
  sac.critic2 = load_net(is);
  sac.target1 = load_net(is);
  sac.target2 = load_net(is);
  if (sac.actor.spec().input_size() != cfg.obs_dim + cfg.goal_dim ||
      sac.actor.spec().output_size() != 2 * cfg.action_dim)
    throw std::runtime_error("policy checkpoint incompatible with config");
  sac.adam_actor = AdamState::for_params(sac.actor.param_count(), cfg.lr);
  sac.adam_critic1 = AdamState::for_params(sac.critic1.param_count(), cfg.lr);
  sac.adam_critic2 = AdamState::for_params(sac.critic2.param_count(), cfg.lr);
  sac.adam_temp = AdamState::for_params(1, cfg.lr);
  sac.replay = ReplayBuffer(cfg.replay_capacity);
  return sac;
}

}  // namespace reachrl
