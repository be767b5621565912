#include "reachrl/gradcheck.hpp"

#include <cmath>

#include "reachrl/rnet.hpp"
#include "reachrl/sac.hpp"

namespace reachrl {

VectorXd finite_difference_gradient(
    const std::function<double(const VectorXd&)>& loss, const VectorXd& params,
    double eps) {
  VectorXd grad(params.size());
  VectorXd p = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    double orig = p[i];
    p[i] = orig + eps;
    double up = loss(p);
    p[i] = orig - eps;
    double down = loss(p);
    p[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double max_relative_error(const VectorXd& analytic, const VectorXd& fd) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    double denom = std::max(1e-6, std::abs(analytic[i]) + std::abs(fd[i]));
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
  }
  return worst;
}

namespace {

MatrixXd random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

double check_net_mse(Rng& rng) {
  Net net(NetSpec{{4, 8, 8, 2}}, rng);
  MatrixXd X = random_matrix(6, 4, rng);
  MatrixXd Y = random_matrix(6, 2, rng);
  auto loss_of = [&](const VectorXd& p) {
    Net probe = net;
    probe.params() = p;
    MatrixXd out = probe.forward_batch(X);
    return (out - Y).squaredNorm() / static_cast<double>(X.rows());
  };
  Net::Cache cache;
  MatrixXd out = net.forward_batch(X, cache);
  VectorXd analytic = VectorXd::Zero(net.param_count());
  MatrixXd dout = 2.0 * (out - Y) / static_cast<double>(X.rows());
  net.backward(cache, dout, analytic);
  VectorXd fd = finite_difference_gradient(loss_of, net.params());
  return max_relative_error(analytic, fd);
}

double check_rnet_bce(Rng& rng) {
  Rng init(rng.next_u64());
  RNetModel model;
  model.embedder = Net(NetSpec{{3, 8, 6}}, init);
  model.comparator = Net(NetSpec{{12, 8, 1}}, init);
  model.tau_reach = 3;

  int n = 8;
  PairBatch batch;
  batch.lhs = random_matrix(n, 3, rng);
  batch.rhs = random_matrix(n, 3, rng);
  batch.labels.resize(n);
  for (int i = 0; i < n; ++i) batch.labels[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;

  std::int64_t ne = model.embedder.param_count();
  std::int64_t nc = model.comparator.param_count();
  VectorXd ge = VectorXd::Zero(ne), gc = VectorXd::Zero(nc);
  rnet_pair_loss_grad(model, batch, ge, gc);
  VectorXd analytic(ne + nc);
  analytic << ge, gc;

  VectorXd joint(ne + nc);
  joint << model.embedder.params(), model.comparator.params();
  auto loss_of = [&](const VectorXd& p) {
    RNetModel probe = model;
    probe.embedder.params() = p.head(ne);
    probe.comparator.params() = p.tail(nc);
    return rnet_pair_loss(probe, batch);
  };
  VectorXd fd = finite_difference_gradient(loss_of, joint);
  return max_relative_error(analytic, fd);
}

SAC tiny_sac(Rng& rng) {
  SACConfig cfg;
  cfg.obs_dim = 3;
  cfg.goal_dim = 3;
  cfg.action_dim = 2;
  cfg.hidden = 8;
  Rng init(rng.next_u64());
  return SAC::init(cfg, init);
}

double check_critic(Rng& rng, bool corrupt) {
  SAC sac = tiny_sac(rng);
  int B = 6;
  MatrixXd sga = random_matrix(B, 8, rng);
  VectorXd y = random_matrix(B, 1, rng).col(0);
  VectorXd analytic = VectorXd::Zero(sac.critic1.param_count());
  critic_loss_grad(sac.critic1, sga, y, analytic);
  if (corrupt) analytic[0] += 1e-2;
  auto loss_of = [&](const VectorXd& p) {
    Net probe = sac.critic1;
    probe.params() = p;
    VectorXd scratch = VectorXd::Zero(probe.param_count());
    return critic_loss_grad(probe, sga, y, scratch);
  };
  VectorXd fd = finite_difference_gradient(loss_of, sac.critic1.params());
  return max_relative_error(analytic, fd);
}

double check_actor(Rng& rng) {
  SAC sac = tiny_sac(rng);
  int B = 6;
  MatrixXd sg = random_matrix(B, 6, rng);
  MatrixXd noise = random_matrix(B, 2, rng);
  double alpha = 0.37;
  VectorXd analytic = VectorXd::Zero(sac.actor.param_count());
  actor_loss_grad(sac, sg, noise, alpha, analytic, nullptr);
  auto loss_of = [&](const VectorXd& p) {
    SAC probe = sac;
    probe.actor.params() = p;
    VectorXd scratch = VectorXd::Zero(probe.actor.param_count());
    return actor_loss_grad(probe, sg, noise, alpha, scratch, nullptr);
  };
  VectorXd fd = finite_difference_gradient(loss_of, sac.actor.params());
  return max_relative_error(analytic, fd);
}

double check_temperature(Rng& rng) {
  double log_temp = rng.uniform(-2.0, 2.0);
  double mean_logp = rng.uniform(-5.0, 5.0);
  double target = -2.0;
  VectorXd analytic(1);
  analytic[0] = temperature_grad(log_temp, mean_logp, target);
  VectorXd params(1);
  params[0] = log_temp;
  auto loss_of = [&](const VectorXd& p) {
    return temperature_loss(p[0], mean_logp, target);
  };
  VectorXd fd = finite_difference_gradient(loss_of, params);
  return max_relative_error(analytic, fd);
}

}  // namespace

std::vector<GradCheckResult> run_gradient_checks(int draws, std::uint64_t seed,
                                                 bool corrupt) {
  std::vector<GradCheckResult> results;
  struct Family {
    const char* name;
    std::function<double(Rng&)> check;
  };
  Rng rng(seed);
  const Family families[] = {
      {"net-mse", [](Rng& r) { return check_net_mse(r); }},
      {"rnet-bce", [](Rng& r) { return check_rnet_bce(r); }},
      {"critic", [&](Rng& r) { return check_critic(r, corrupt); }},
      {"actor", [](Rng& r) { return check_actor(r); }},
      {"temperature", [](Rng& r) { return check_temperature(r); }},
  };
  for (const Family& family : families) {
    GradCheckResult res;
    res.family = family.name;
    res.draws = draws;
    for (int d = 0; d < draws; ++d)
      res.max_rel_err = std::max(res.max_rel_err, family.check(rng));
    results.push_back(res);
  }
  return results;
}

}  // namespace reachrl
