#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "reachrl/rng.hpp"

namespace reachrl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Fully-connected network shape: tanh on hidden layers, identity output.
struct NetSpec {
  std::vector<int> layer_sizes;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  std::int64_t param_count() const;
  bool valid() const;
  bool operator==(const NetSpec&) const = default;
};

// Feed-forward net over a single flat parameter vector. Layer l stores its
// weight matrix (in x out, column-major) followed by its bias.
class Net {
 public:
  Net() = default;
  Net(NetSpec spec, Rng& rng);  // glorot-uniform weights, zero biases

  static Net zeros(NetSpec spec);

  const NetSpec& spec() const { return spec_; }
  VectorXd& params() { return params_; }
  const VectorXd& params() const { return params_; }
  std::int64_t param_count() const { return params_.size(); }

  Eigen::Map<const MatrixXd> weight(int layer) const;
  Eigen::Map<const VectorXd> bias(int layer) const;
  Eigen::Map<MatrixXd> weight(int layer);
  Eigen::Map<VectorXd> bias(int layer);

  VectorXd forward(const VectorXd& x) const;

  // Rows are samples.
  MatrixXd forward_batch(const MatrixXd& X) const;

  // Activations kept for the backward pass: acts[0] is the input, acts[l]
  // the post-activation output of layer l.
  struct Cache {
    std::vector<MatrixXd> acts;
  };
  MatrixXd forward_batch(const MatrixXd& X, Cache& cache) const;

  // Accumulates dLoss/dparams into grad (must be zero-initialised to
  // param_count()). grad_out is dLoss/d(output), one row per sample.
  // Returns dLoss/d(input) when want_input_grad is set.
  MatrixXd backward(const Cache& cache, const MatrixXd& grad_out,
                    VectorXd& grad, bool want_input_grad = false) const;

 private:
  NetSpec spec_;
  VectorXd params_;
  std::vector<std::int64_t> w_off_, b_off_;

  void build_offsets();
};

struct AdamState {
  VectorXd m, v;
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_params(std::int64_t n, double lr);
};

void adam_step(VectorXd& params, const VectorXd& grad, AdamState& state);

double sigmoid(double x);
double softplus(double x);

// softplus(logit) - label * logit; stable for large |logit|
double bce_with_logits(double logit, double label);

struct Pca2d {
  VectorXd mean;
  VectorXd component1, component2;  // orthonormal
  MatrixXd projections;             // n x 2
};

// Top-2 principal components by power iteration with deflation. Sign
// convention: first nonzero entry of each component is positive.
Pca2d pca_2d(const MatrixXd& points);

// Text checkpoint: header line, layer sizes, then one %.17g value per line.
void save_net(std::ostream& os, const Net& net);
Net load_net(std::istream& is);

}  // namespace reachrl
