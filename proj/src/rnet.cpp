#include "reachrl/rnet.hpp"

#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace reachrl {

TrajectoryBuffer::TrajectoryBuffer(std::size_t step_capacity)
    : capacity_(step_capacity) {}

long TrajectoryBuffer::add(std::vector<Obs> states) {
  if (states.empty())
    throw std::invalid_argument("trajectory must be non-empty");
  Trajectory t;
  t.id = next_id_++;
  t.states = std::move(states);
  total_steps_ += t.states.size();
  trajectories_.push_back(std::move(t));
  while (total_steps_ > capacity_ && trajectories_.size() > 1) {
    total_steps_ -= trajectories_.front().states.size();
    trajectories_.pop_front();
  }
  return trajectories_.back().id;
}

void write_trajectories(std::ostream& os, const TrajectoryBuffer& buffer) {
  char buf[64];
  for (std::size_t k = 0; k < buffer.num_trajectories(); ++k) {
    if (k > 0) os << "\n";
    for (const Obs& o : buffer.trajectory(k).states) {
      for (Eigen::Index i = 0; i < o.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", o[i]);
        if (i > 0) os << ' ';
        os << buf;
      }
      os << "\n";
    }
  }
}

TrajectoryBuffer read_trajectories(std::istream& is, std::size_t capacity) {
  TrajectoryBuffer buffer(capacity);
  std::vector<Obs> current;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.empty()) {
      if (!current.empty()) buffer.add(std::move(current));
      current.clear();
      continue;
    }
    Obs o(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) o[i] = vals[i];
    current.push_back(std::move(o));
  }
  if (!current.empty()) buffer.add(std::move(current));
  return buffer;
}

int reachability_label(long traj_a, long traj_b, int i, int j, int tau_reach) {
  return (traj_a == traj_b && std::abs(i - j) <= tau_reach) ? 1 : 0;
}

PairBatch sample_pairs(const TrajectoryBuffer& buffer, int batch_size, Rng& rng,
                       int tau_reach) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  int n_pos = (batch_size + 1) / 2;
  int n_neg = batch_size / 2;
  int n_far = (n_neg + 1) / 2;    // same trajectory, gap > 2*tau_reach
  int n_cross = n_neg - n_far;    // different trajectories

  std::vector<std::size_t> far_ok;  // long enough for a far pair
  for (std::size_t k = 0; k < buffer.num_trajectories(); ++k) {
    if (static_cast<int>(buffer.trajectory(k).states.size()) >=
        2 * tau_reach + 2)
      far_ok.push_back(k);
  }
  if (buffer.num_trajectories() == 0 ||
      (n_cross > 0 && buffer.num_trajectories() < 2) ||
      (n_far > 0 && far_ok.empty()))
    throw std::runtime_error("trajectory buffer too small for pair sampling");

  int obs_dim = static_cast<int>(buffer.trajectory(0).states[0].size());
  PairBatch batch;
  batch.lhs.resize(batch_size, obs_dim);
  batch.rhs.resize(batch_size, obs_dim);
  batch.labels.resize(batch_size);
  batch.source.reserve(batch_size);

  auto put = [&](int row, const Trajectory& ta, const Trajectory& tb, int i,
                 int j) {
    batch.lhs.row(row) = ta.states[i].transpose();
    batch.rhs.row(row) = tb.states[j].transpose();
    batch.labels[row] =
        reachability_label(ta.id, tb.id, i, j, tau_reach);
    batch.source.push_back({ta.id, tb.id, i, j});
  };

  int row = 0;
  for (int k = 0; k < n_pos; ++k, ++row) {
    const Trajectory& t =
        buffer.trajectory(rng.uniform_int(buffer.num_trajectories()));
    int len = static_cast<int>(t.states.size());
    int i = rng.uniform_int(len);
    int lo = std::max(0, i - tau_reach);
    int hi = std::min(len - 1, i + tau_reach);
    int j = lo + rng.uniform_int(hi - lo + 1);
    put(row, t, t, i, j);
  }
  for (int k = 0; k < n_far; ++k, ++row) {
    const Trajectory& t =
        buffer.trajectory(far_ok[rng.uniform_int(far_ok.size())]);
    int len = static_cast<int>(t.states.size());
    int gap = 2 * tau_reach + 1 + rng.uniform_int(len - (2 * tau_reach + 1));
    int i = rng.uniform_int(len - gap);
    put(row, t, t, i, i + gap);
  }
  for (int k = 0; k < n_cross; ++k, ++row) {
    int a = rng.uniform_int(buffer.num_trajectories());
    int b = rng.uniform_int(buffer.num_trajectories() - 1);
    if (b >= a) ++b;
    const Trajectory& ta = buffer.trajectory(a);
    const Trajectory& tb = buffer.trajectory(b);
    int i = rng.uniform_int(ta.states.size());
    int j = rng.uniform_int(tb.states.size());
    put(row, ta, tb, i, j);
  }
  return batch;
}

RNetModel::RNetModel() {
  static std::atomic<long> next_id{1};
  model_id = next_id.fetch_add(1);
}

RNetModel RNetModel::init(int obs_dim, int tau_reach, Rng& rng) {
  if (tau_reach < 1) throw std::invalid_argument("tau_reach must be >= 1");
  RNetModel m;
  m.embedder = Net(NetSpec{{obs_dim, 64, 64, 16}}, rng);
  m.comparator = Net(NetSpec{{32, 64, 1}}, rng);
  m.tau_reach = tau_reach;
  return m;
}

double rnet_logit(const RNetModel& model, const Obs& si, const Obs& sj) {
  VectorXd ei = model.embedder.forward(si);
  VectorXd ej = model.embedder.forward(sj);
  VectorXd cat(ei.size() + ej.size());
  cat << ei, ej;
  return model.comparator.forward(cat)[0];
}

double rnet_score(const RNetModel& model, const Obs& si, const Obs& sj) {
  return sigmoid(rnet_logit(model, si, sj));
}

double rnet_distance(const RNetModel& model, const Obs& si, const Obs& sj) {
  return -rnet_logit(model, si, sj);
}

VectorXd rnet_embed(const RNetModel& model, const Obs& s) {
  return model.embedder.forward(s);
}

MatrixXd rnet_embed_batch(const RNetModel& model, const MatrixXd& rows) {
  return model.embedder.forward_batch(rows);
}

VectorXd rnet_logits_against(const RNetModel& model, const VectorXd& query_emb,
                             const MatrixXd& embeddings) {
  MatrixXd cat(embeddings.rows(), query_emb.size() + embeddings.cols());
  cat.leftCols(query_emb.size()).rowwise() = query_emb.transpose();
  cat.rightCols(embeddings.cols()) = embeddings;
  return model.comparator.forward_batch(cat).col(0);
}

namespace {

// Shared forward pass for loss and gradient.
struct PairForward {
  Net::Cache emb_cache;  // lhs rows stacked on rhs rows
  Net::Cache cmp_cache;
  VectorXd logits;
};

void pair_forward(const RNetModel& model, const PairBatch& batch,
                  PairForward& fwd) {
  Eigen::Index n = batch.lhs.rows();
  MatrixXd stacked(2 * n, batch.lhs.cols());
  stacked.topRows(n) = batch.lhs;
  stacked.bottomRows(n) = batch.rhs;
  MatrixXd emb = model.embedder.forward_batch(stacked, fwd.emb_cache);
  MatrixXd cat(n, 2 * emb.cols());
  cat.leftCols(emb.cols()) = emb.topRows(n);
  cat.rightCols(emb.cols()) = emb.bottomRows(n);
  fwd.logits = model.comparator.forward_batch(cat, fwd.cmp_cache).col(0);
}

double mean_bce(const VectorXd& logits, const VectorXd& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    total += bce_with_logits(logits[i], labels[i]);
  return total / static_cast<double>(logits.size());
}

}  // namespace

double rnet_pair_loss(const RNetModel& model, const PairBatch& batch) {
  PairForward fwd;
  pair_forward(model, batch, fwd);
  return mean_bce(fwd.logits, batch.labels);
}

double rnet_pair_loss_grad(const RNetModel& model, const PairBatch& batch,
                           VectorXd& grad_embedder,
                           VectorXd& grad_comparator) {
  PairForward fwd;
  pair_forward(model, batch, fwd);
  Eigen::Index n = batch.lhs.rows();
  double loss = mean_bce(fwd.logits, batch.labels);

  MatrixXd dlogit(n, 1);
  for (Eigen::Index i = 0; i < n; ++i)
    dlogit(i, 0) =
        (sigmoid(fwd.logits[i]) - batch.labels[i]) / static_cast<double>(n);

  MatrixXd dcat =
      model.comparator.backward(fwd.cmp_cache, dlogit, grad_comparator, true);
  int d = model.embedding_dim();
  MatrixXd demb(2 * n, d);
  demb.topRows(n) = dcat.leftCols(d);
  demb.bottomRows(n) = dcat.rightCols(d);
  model.embedder.backward(fwd.emb_cache, demb, grad_embedder);
  return loss;
}

RNetOptimizer RNetOptimizer::for_model(const RNetModel& model, double lr) {
  RNetOptimizer opt;
  opt.embedder = AdamState::for_params(model.embedder.param_count(), lr);
  opt.comparator = AdamState::for_params(model.comparator.param_count(), lr);
  return opt;
}

RNetTrainStats rnet_train(RNetModel& model, const TrajectoryBuffer& buffer,
                          int steps, int batch_size, RNetOptimizer& opt,
                          Rng& rng) {
  RNetTrainStats stats;
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  VectorXd ge(model.embedder.param_count());
  VectorXd gc(model.comparator.param_count());
  double window = 0.0;
  int window_n = 0;
  for (int step = 0; step < steps; ++step) {
    PairBatch batch = sample_pairs(buffer, batch_size, rng, model.tau_reach);
    ge.setZero();
    gc.setZero();
    double loss = rnet_pair_loss_grad(model, batch, ge, gc);
    if (!std::isfinite(loss))
      throw std::runtime_error("rnet training loss is not finite");
    adam_step(model.embedder.params(), ge, opt.embedder);
    adam_step(model.comparator.params(), gc, opt.comparator);
    window += loss;
    window_n += 1;
    if (window_n == 100 || step + 1 == steps) {
      stats.mean_loss_per_100.push_back(window / window_n);
      window = 0.0;
      window_n = 0;
    }
  }
  stats.steps = steps;
  if (steps > 0) {
    model.version += 1;
    PairBatch probe = sample_pairs(buffer, 1024, rng, model.tau_reach);
    PairForward fwd;
    pair_forward(model, probe, fwd);
    double pos_hit = 0, pos_n = 0, neg_hit = 0, neg_n = 0;
    for (Eigen::Index i = 0; i < probe.labels.size(); ++i) {
      bool predicted = fwd.logits[i] > 0.0;
      if (probe.labels[i] > 0.5) {
        pos_n += 1;
        if (predicted) pos_hit += 1;
      } else {
        neg_n += 1;
        if (!predicted) neg_hit += 1;
      }
    }
    stats.probe_accuracy = 0.5 * (pos_hit / pos_n + neg_hit / neg_n);
  }
  return stats;
}

static const char* kRNetHeader = "reachrl-rnet-v1";

void save_rnet(std::ostream& os, const RNetModel& model) {
  os << kRNetHeader << "\n";
  os << "tau_reach " << model.tau_reach << "\n";
  save_net(os, model.embedder);
  save_net(os, model.comparator);
}

RNetModel load_rnet(std::istream& is) {
  is >> std::ws;
  std::string header;
  if (!std::getline(is, header) || header != kRNetHeader)
    throw std::runtime_error("bad rnet checkpoint header");
  std::string key;
  RNetModel model;
  is >> key >> model.tau_reach;
  if (!is || key != "tau_reach" || model.tau_reach < 1)
    throw std::runtime_error("bad rnet checkpoint tau_reach");
  model.embedder = load_net(is);
  model.comparator = load_net(is);
  return model;
}

}  // namespace reachrl
