#include "reachrl/memory.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace reachrl {

GoalMemory::GoalMemory(MemoryMode mode, double tau_memory, int k_max)
    : mode_(mode), tau_memory_(tau_memory), k_max_(k_max) {
  if (k_max_ < 1) throw std::invalid_argument("k_max must be >= 1");
}

int GoalMemory::area_count(int anchor_entry) const {
  int k = 0;
  for (int i = 0; i < count_; ++i)
    if (anchor_of_[i] == anchor_entry) ++k;
  return k;
}

void GoalMemory::append_entry(const Obs& s, double weight, int anchor) {
  if (count_ == 0) {
    entries_.resize(16, s.size());
  } else if (count_ == entries_.rows()) {
    MatrixXd grown(entries_.rows() * 2, entries_.cols());
    grown.topRows(count_) = entries_.topRows(count_);
    entries_.swap(grown);
  }
  entries_.row(count_) = s.transpose();
  weights_.push_back(weight);
  anchor_of_.push_back(anchor);
  ++count_;
}

void GoalMemory::force_insert(const Obs& s) {
  append_entry(s, 1.0, count_);
  anchors_.push_back(count_ - 1);
  log_.push_back({s, true, count_ - 1});
}

const MatrixXd& GoalMemory::embedding_cache(const RNetModel& model) const {
  if (cache_version_ != model.version || cache_model_ != model.model_id ||
      cache_rows_ > count_) {
    refresh_cache(model);
  } else if (cache_rows_ < count_) {
    // embed only the rows appended since the last refresh
    if (emb_cache_.rows() < count_) {
      MatrixXd grown(std::max<Eigen::Index>(count_, emb_cache_.rows() * 2),
                     model.embedding_dim());
      grown.topRows(cache_rows_) = emb_cache_.topRows(cache_rows_);
      emb_cache_.swap(grown);
    }
    emb_cache_.middleRows(cache_rows_, count_ - cache_rows_) =
        rnet_embed_batch(model,
                         entries_.middleRows(cache_rows_, count_ - cache_rows_));
    cache_rows_ = count_;
  }
  return emb_cache_;
}

void GoalMemory::refresh_cache(const RNetModel& model) const {
  emb_cache_.resize(std::max(count_, 16), model.embedding_dim());
  if (count_ > 0)
    emb_cache_.topRows(count_) = rnet_embed_batch(model, entries_.topRows(count_));
  cache_rows_ = count_;
  cache_version_ = model.version;
  cache_model_ = model.model_id;
}

VectorXd GoalMemory::scores_against_entries(const RNetModel& model,
                                            const Obs& s) const {
  const MatrixXd& cache = embedding_cache(model);
  VectorXd query = rnet_embed(model, s);
  VectorXd logits =
      rnet_logits_against(model, query, cache.topRows(count_));
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    logits[i] = sigmoid(logits[i]);
  return logits;
}

VectorXd GoalMemory::scores_against_anchors(const RNetModel& model,
                                            const Obs& s) const {
  const MatrixXd& cache = embedding_cache(model);
  MatrixXd anchor_emb(anchors_.size(), model.embedding_dim());
  for (std::size_t k = 0; k < anchors_.size(); ++k)
    anchor_emb.row(k) = cache.row(anchors_[k]);
  VectorXd query = rnet_embed(model, s);
  VectorXd logits = rnet_logits_against(model, query, anchor_emb);
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    logits[i] = sigmoid(logits[i]);
  return logits;
}

bool GoalMemory::try_insert(const Obs& s, const RNetModel& model) {
  if (mode_ == MemoryMode::filtered) {
    bool accepted = true;
    if (count_ > 0 && tau_memory_ < 1.0) {
      VectorXd scores = scores_against_entries(model, s);
      accepted = (scores.array() < tau_memory_).all();
    }
    if (accepted) {
      append_entry(s, 1.0, count_);
      anchors_.push_back(count_ - 1);
    }
    log_.push_back({s, accepted, accepted ? count_ - 1 : -1});
    return accepted;
  }

  // weighted mode
  if (anchors_.empty()) {
    force_insert(s);
    return true;
  }
  VectorXd scores = scores_against_anchors(model, s);
  int best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = static_cast<int>(i);
  if (scores[best] < tau_memory_) {
    append_entry(s, 1.0, count_);
    anchors_.push_back(count_ - 1);
    log_.push_back({s, true, count_ - 1});
    return true;
  }
  int anchor_entry = anchors_[best];
  int k = area_count(anchor_entry);
  if (k >= k_max_) {
    log_.push_back({s, false, anchor_entry});
    return false;
  }
  append_entry(s, 0.0, anchor_entry);
  double w = 1.0 / static_cast<double>(k + 1);
  for (int i = 0; i < count_; ++i)
    if (anchor_of_[i] == anchor_entry) weights_[i] = w;
  log_.push_back({s, true, anchor_entry});
  return true;
}

bool GoalMemory::oracle_try_insert(const Obs& s, const Env& env) {
  constexpr double kOracleThreshold = 0.0075;
  bool accepted = true;
  for (int i = 0; i < count_; ++i) {
    if (env.oracle_distance(s, entry(i)) <= kOracleThreshold) {
      accepted = false;
      break;
    }
  }
  if (accepted) {
    append_entry(s, 1.0, count_);
    anchors_.push_back(count_ - 1);
  }
  log_.push_back({s, accepted, accepted ? count_ - 1 : -1});
  return accepted;
}

std::pair<Obs, int> GoalMemory::sample_goal(Rng& rng) const {
  if (count_ == 0) throw std::runtime_error("sample_goal: memory is empty");
  double total = 0.0;
  for (int i = 0; i < count_; ++i) total += weights_[i];
  double u = rng.uniform() * total;
  double acc = 0.0;
  for (int i = 0; i < count_; ++i) {
    acc += weights_[i];
    if (u < acc) return {entry(i), i};
  }
  return {entry(count_ - 1), count_ - 1};
}

void GoalMemory::write_dump(std::ostream& os,
                            const std::vector<std::string>& obs_names) const {
  os << "index weight";
  for (const auto& n : obs_names) os << ' ' << n;
  os << "\n";
  char buf[64];
  for (int i = 0; i < count_; ++i) {
    os << i;
    std::snprintf(buf, sizeof(buf), "%.17g", weights_[i]);
    os << ' ' << buf;
    for (Eigen::Index c = 0; c < entries_.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", entries_(i, c));
      os << ' ' << buf;
    }
    os << "\n";
  }
}

static const char* kMemoryHeader = "reachrl-memory-v1";

void GoalMemory::save(std::ostream& os) const {
  os << kMemoryHeader << "\n";
  os << (mode_ == MemoryMode::filtered ? "filtered" : "weighted") << ' '
     << tau_memory_ << ' ' << k_max_ << "\n";
  os << count_ << ' ' << (count_ > 0 ? entries_.cols() : 0) << "\n";
  char buf[64];
  for (int i = 0; i < count_; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", weights_[i]);
    os << buf << ' ' << anchor_of_[i];
    for (Eigen::Index c = 0; c < entries_.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", entries_(i, c));
      os << ' ' << buf;
    }
    os << "\n";
  }
}

GoalMemory GoalMemory::load(std::istream& is) {
  is >> std::ws;
  std::string header;
  if (!std::getline(is, header) || header != kMemoryHeader)
    throw std::runtime_error("bad memory checkpoint header");
  std::string mode;
  double tau;
  int k_max, count, dim;
  is >> mode >> tau >> k_max >> count >> dim;
  if (!is || (mode != "filtered" && mode != "weighted"))
    throw std::runtime_error("bad memory checkpoint mode");
  GoalMemory mem(mode == "filtered" ? MemoryMode::filtered
                                    : MemoryMode::weighted,
                 tau, k_max);
  for (int i = 0; i < count; ++i) {
    double w;
    int anchor;
    is >> w >> anchor;
    Obs o(dim);
    for (int c = 0; c < dim; ++c) is >> o[c];
    if (!is) throw std::runtime_error("truncated memory checkpoint");
    mem.append_entry(o, w, anchor);
    if (anchor == i) mem.anchors_.push_back(i);
  }
  return mem;
}

Eigen::MatrixXi all_pairs_hops(const std::vector<std::vector<int>>& adjacency) {
  int n = static_cast<int>(adjacency.size());
  Eigen::MatrixXi dist(n, n);
  dist.setConstant(n);  // `n` encodes unreachable
  std::vector<int> queue;
  for (int src = 0; src < n; ++src) {
    queue.clear();
    queue.push_back(src);
    dist(src, src) = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      int u = queue[head];
      int du = dist(src, u);
      for (int v : adjacency[u]) {
        if (dist(src, v) == n) {
          dist(src, v) = du + 1;
          queue.push_back(v);
        }
      }
    }
  }
  return dist;
}

bool MemoryGraph::edge(int i, int j) const {
  for (int n : adjacency[i])
    if (n == j) return true;
  return false;
}

MemoryGraph build_graph(const GoalMemory& memory, const RNetModel& model,
                        double tau_graph) {
  if (memory.size() == 0)
    throw std::runtime_error("build_graph: memory is empty");
  int n = memory.size();
  MemoryGraph graph;
  graph.nodes = n;
  graph.tau_graph = tau_graph;
  graph.adjacency.assign(n, {});

  const MatrixXd& emb = memory.embedding_cache(model);
  MatrixXd score(n, n);
  for (int i = 0; i < n; ++i) {
    VectorXd logits =
        rnet_logits_against(model, emb.row(i).transpose(), emb.topRows(n));
    for (int j = 0; j < n; ++j) score(i, j) = sigmoid(logits[j]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::max(score(i, j), score(j, i)) > tau_graph) {
        graph.adjacency[i].push_back(j);
        graph.adjacency[j].push_back(i);
      }
    }
  }

  graph.dist = all_pairs_hops(graph.adjacency);
  return graph;
}

int nearest_node(const GoalMemory& memory, const RNetModel& model,
                 const Obs& s) {
  if (memory.size() == 0)
    throw std::runtime_error("nearest_node: memory is empty");
  VectorXd scores = memory.scores_against_entries(model, s);
  int best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = static_cast<int>(i);
  return best;
}

double graph_distance_to_node(const MemoryGraph& graph,
                              const GoalMemory& memory, const RNetModel& model,
                              const Obs& s, int goal_node) {
  int ns = nearest_node(memory, model, s);
  return static_cast<double>(graph.dist(ns, goal_node));
}

double graph_distance(const MemoryGraph& graph, const GoalMemory& memory,
                      const RNetModel& model, const Obs& s, const Obs& g) {
  return graph_distance_to_node(graph, memory, model, s,
                                nearest_node(memory, model, g));
}

}  // namespace reachrl
