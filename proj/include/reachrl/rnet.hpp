#pragma once

#include <array>
#include <deque>
#include <iosfwd>

#include "reachrl/env.hpp"
#include "reachrl/net.hpp"

namespace reachrl {

struct Trajectory {
  long id = 0;
  std::vector<Obs> states;
};

// Random-walk trajectory store with whole-trajectory FIFO eviction.
class TrajectoryBuffer {
 public:
  explicit TrajectoryBuffer(std::size_t step_capacity = 200000);

  long add(std::vector<Obs> states);  // returns the assigned trajectory id
  std::size_t num_trajectories() const { return trajectories_.size(); }
  std::size_t total_steps() const { return total_steps_; }
  std::size_t capacity() const { return capacity_; }
  const Trajectory& trajectory(std::size_t i) const { return trajectories_[i]; }

 private:
  std::size_t capacity_;
  std::size_t total_steps_ = 0;
  long next_id_ = 0;
  std::deque<Trajectory> trajectories_;
};

// One observation per line, whitespace-separated components, trajectories
// separated by blank lines.
void write_trajectories(std::ostream& os, const TrajectoryBuffer& buffer);
TrajectoryBuffer read_trajectories(std::istream& is, std::size_t capacity);

// 1 iff both indices are in the same trajectory within tau_reach steps.
int reachability_label(long traj_a, long traj_b, int i, int j, int tau_reach);

struct PairBatch {
  MatrixXd lhs, rhs;  // rows are observations
  VectorXd labels;
  // (traj_a, traj_b, i, j) per row, kept so labels can be re-derived
  std::vector<std::array<long, 4>> source;
};

// Balanced batch: ceil(n/2) positives, then negatives split between
// same-trajectory pairs with gap > 2*tau_reach and cross-trajectory pairs.
PairBatch sample_pairs(const TrajectoryBuffer& buffer, int batch_size, Rng& rng,
                       int tau_reach);

// Siamese reachability model: embedding net g and comparator head f,
// score(s_i, s_j) = sigmoid(f(g(s_i) || g(s_j))).
struct RNetModel {
  RNetModel();

  Net embedder;    // obs_dim -> 64 -> 64 -> 16
  Net comparator;  // 32 -> 64 -> 1
  int tau_reach = 5;
  long version = 0;
  long model_id = 0;  // distinguishes unrelated models in embedding caches

  static RNetModel init(int obs_dim, int tau_reach, Rng& rng);
  int embedding_dim() const { return embedder.spec().output_size(); }
};

double rnet_logit(const RNetModel& model, const Obs& si, const Obs& sj);
double rnet_score(const RNetModel& model, const Obs& si, const Obs& sj);
double rnet_distance(const RNetModel& model, const Obs& si, const Obs& sj);

VectorXd rnet_embed(const RNetModel& model, const Obs& s);
MatrixXd rnet_embed_batch(const RNetModel& model, const MatrixXd& rows);

// Comparator logits of one query embedding against many stored embeddings:
// row i gets f(query || embeddings[i]).
VectorXd rnet_logits_against(const RNetModel& model, const VectorXd& query_emb,
                             const MatrixXd& embeddings);

// Mean BCE of the batch; gradients accumulate into zeroed vectors sized for
// the embedder and comparator respectively.
double rnet_pair_loss(const RNetModel& model, const PairBatch& batch);
double rnet_pair_loss_grad(const RNetModel& model, const PairBatch& batch,
                           VectorXd& grad_embedder, VectorXd& grad_comparator);

struct RNetOptimizer {
  AdamState embedder;
  AdamState comparator;

  static RNetOptimizer for_model(const RNetModel& model, double lr);
};

struct RNetTrainStats {
  std::vector<double> mean_loss_per_100;
  double probe_accuracy = 0.0;  // balanced accuracy on a fresh 1024-pair probe
  long steps = 0;
};

RNetTrainStats rnet_train(RNetModel& model, const TrajectoryBuffer& buffer,
                          int steps, int batch_size, RNetOptimizer& opt,
                          Rng& rng);

void save_rnet(std::ostream& os, const RNetModel& model);
RNetModel load_rnet(std::istream& is);

}  // namespace reachrl
