#pragma once

#include <iosfwd>
#include <optional>

#include "reachrl/env.hpp"
#include "reachrl/rnet.hpp"

namespace reachrl {

enum class MemoryMode { filtered, weighted };

struct InsertionRecord {
  Obs candidate;
  bool accepted = false;
  int anchor = -1;  // weighted mode: area joined or created
};

// Curated goal set. In filtered mode a candidate is kept only when its
// reachability score against every stored entry stays below tau_memory.
// In weighted mode up to k_max states may share a reachable area, sampled
// with weight 1/k so every area stays equally represented.
class GoalMemory {
 public:
  GoalMemory() : GoalMemory(MemoryMode::filtered, 0.5) {}
  GoalMemory(MemoryMode mode, double tau_memory, int k_max = 5);

  MemoryMode mode() const { return mode_; }
  double tau_memory() const { return tau_memory_; }
  int k_max() const { return k_max_; }

  int size() const { return count_; }
  Obs entry(int i) const { return entries_.row(i).transpose(); }
  Eigen::Block<const MatrixXd> entries() const {
    return entries_.topRows(count_);
  }
  double weight(int i) const { return weights_[i]; }
  int anchor_of(int i) const { return anchor_of_[i]; }
  const std::vector<int>& anchors() const { return anchors_; }
  int area_count(int anchor_entry) const;

  // Bootstrap insertion that bypasses the filter.
  void force_insert(const Obs& s);

  bool try_insert(const Obs& s, const RNetModel& model);

  // Pusher ablation: admit s only when the oracle distance to every entry
  // exceeds 0.0075.
  bool oracle_try_insert(const Obs& s, const Env& env);

  std::pair<Obs, int> sample_goal(Rng& rng) const;

  const std::vector<InsertionRecord>& insertion_log() const { return log_; }

  // Reachability scores of s against all entries (batched through the
  // cached entry embeddings; same path the filter itself uses).
  VectorXd scores_against_entries(const RNetModel& model, const Obs& s) const;
  VectorXd scores_against_anchors(const RNetModel& model, const Obs& s) const;

  const MatrixXd& embedding_cache(const RNetModel& model) const;
  void refresh_cache(const RNetModel& model) const;

  void write_dump(std::ostream& os,
                  const std::vector<std::string>& obs_names) const;
  void save(std::ostream& os) const;
  static GoalMemory load(std::istream& is);

 private:
  MemoryMode mode_;
  double tau_memory_;
  int k_max_;
  MatrixXd entries_;  // capacity-managed, rows are observations
  int count_ = 0;
  std::vector<double> weights_;
  std::vector<int> anchor_of_;  // entry index of the owning anchor
  std::vector<int> anchors_;
  std::vector<InsertionRecord> log_;

  mutable MatrixXd emb_cache_;
  mutable long cache_version_ = -1;
  mutable long cache_model_ = -1;
  mutable int cache_rows_ = 0;

  void append_entry(const Obs& s, double weight, int anchor);
};

struct MemoryGraph {
  int nodes = 0;
  double tau_graph = 0.5;
  std::vector<std::vector<int>> adjacency;
  Eigen::MatrixXi dist;  // hop counts; unreachable pairs hold `nodes`

  bool edge(int i, int j) const;
};

// All-pairs hop counts by BFS from every node; unreachable pairs get the
// node count.
Eigen::MatrixXi all_pairs_hops(const std::vector<std::vector<int>>& adjacency);

// Undirected edges where either directed score clears tau_graph; all-pairs
// hop distances by BFS from every node.
MemoryGraph build_graph(const GoalMemory& memory, const RNetModel& model,
                        double tau_graph);

// argmax over entries of score(s, entry); ties take the lowest index.
int nearest_node(const GoalMemory& memory, const RNetModel& model,
                 const Obs& s);

double graph_distance(const MemoryGraph& graph, const GoalMemory& memory,
                      const RNetModel& model, const Obs& s, const Obs& g);

// Variant with the goal's node resolved once by the caller.
double graph_distance_to_node(const MemoryGraph& graph,
                              const GoalMemory& memory, const RNetModel& model,
                              const Obs& s, int goal_node);

}  // namespace reachrl
