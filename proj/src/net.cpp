#include "reachrl/net.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace reachrl {

std::int64_t NetSpec::param_count() const {
  std::int64_t n = 0;
  for (int l = 0; l + 1 < static_cast<int>(layer_sizes.size()); ++l) {
    n += static_cast<std::int64_t>(layer_sizes[l]) * layer_sizes[l + 1] +
         layer_sizes[l + 1];
  }
  return n;
}

bool NetSpec::valid() const {
  if (layer_sizes.size() < 2) return false;
  for (int s : layer_sizes)
    if (s < 1) return false;
  return true;
}

void Net::build_offsets() {
  w_off_.clear();
  b_off_.clear();
  std::int64_t off = 0;
  for (int l = 0; l < spec_.num_layers(); ++l) {
    std::int64_t in = spec_.layer_sizes[l];
    std::int64_t out = spec_.layer_sizes[l + 1];
    w_off_.push_back(off);
    off += in * out;
    b_off_.push_back(off);
    off += out;
  }
  params_.resize(off);
}

Net::Net(NetSpec spec, Rng& rng) : spec_(std::move(spec)) {
  if (!spec_.valid()) throw std::invalid_argument("invalid net spec");
  build_offsets();
  params_.setZero();
  for (int l = 0; l < spec_.num_layers(); ++l) {
    std::int64_t in = spec_.layer_sizes[l];
    std::int64_t out = spec_.layer_sizes[l + 1];
    double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    double* w = params_.data() + w_off_[l];
    for (std::int64_t k = 0; k < in * out; ++k) w[k] = rng.uniform(-limit, limit);
  }
}

Net Net::zeros(NetSpec spec) {
  Net net;
  net.spec_ = std::move(spec);
  if (!net.spec_.valid()) throw std::invalid_argument("invalid net spec");
  net.build_offsets();
  net.params_.setZero();
  return net;
}

Eigen::Map<const MatrixXd> Net::weight(int layer) const {
  return {params_.data() + w_off_[layer], spec_.layer_sizes[layer],
          spec_.layer_sizes[layer + 1]};
}

Eigen::Map<const VectorXd> Net::bias(int layer) const {
  return {params_.data() + b_off_[layer], spec_.layer_sizes[layer + 1]};
}

Eigen::Map<MatrixXd> Net::weight(int layer) {
  return {params_.data() + w_off_[layer], spec_.layer_sizes[layer],
          spec_.layer_sizes[layer + 1]};
}

Eigen::Map<VectorXd> Net::bias(int layer) {
  return {params_.data() + b_off_[layer], spec_.layer_sizes[layer + 1]};
}

MatrixXd Net::forward_batch(const MatrixXd& X, Cache& cache) const {
  if (X.cols() != spec_.input_size())
    throw std::invalid_argument("net input size mismatch");
  int L = spec_.num_layers();
  cache.acts.resize(L + 1);
  cache.acts[0] = X;
  for (int l = 0; l < L; ++l) {
    MatrixXd& a = cache.acts[l + 1];
    a.noalias() = cache.acts[l] * weight(l);
    a.rowwise() += bias(l).transpose();
    if (l + 1 < L) a = a.array().tanh();
  }
  return cache.acts[L];
}

MatrixXd Net::forward_batch(const MatrixXd& X) const {
  Cache cache;
  return forward_batch(X, cache);
}

VectorXd Net::forward(const VectorXd& x) const {
  MatrixXd X = x.transpose();
  return forward_batch(X).row(0).transpose();
}

MatrixXd Net::backward(const Cache& cache, const MatrixXd& grad_out,
                       VectorXd& grad, bool want_input_grad) const {
  int L = spec_.num_layers();
  MatrixXd g = grad_out;  // dLoss/d(act of current layer)
  for (int l = L - 1; l >= 0; --l) {
    if (l + 1 < L) {
      // hidden layer: tanh'(z) = 1 - act^2
      g = g.array() * (1.0 - cache.acts[l + 1].array().square());
    }
    Eigen::Map<MatrixXd> gw(grad.data() + w_off_[l], spec_.layer_sizes[l],
                            spec_.layer_sizes[l + 1]);
    Eigen::Map<VectorXd> gb(grad.data() + b_off_[l], spec_.layer_sizes[l + 1]);
    gw.noalias() += cache.acts[l].transpose() * g;
    gb += g.colwise().sum().transpose();
    if (l > 0 || want_input_grad) {
      g = (g * weight(l).transpose()).eval();
    }
  }
  return want_input_grad ? g : MatrixXd();
}

AdamState AdamState::for_params(std::int64_t n, double lr_) {
  AdamState st;
  st.m = VectorXd::Zero(n);
  st.v = VectorXd::Zero(n);
  st.lr = lr_;
  return st;
}

void adam_step(VectorXd& params, const VectorXd& grad, AdamState& state) {
  if (params.size() != grad.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step shape mismatch");
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v.array().matrix() +
            (1.0 - state.beta2) * grad.array().square().matrix();
  double bc1 = 1.0 - std::pow(state.beta1, state.step);
  double bc2 = 1.0 - std::pow(state.beta2, state.step);
  params.array() -= state.lr * (state.m.array() / bc1) /
                    ((state.v.array() / bc2).sqrt() + state.eps);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double bce_with_logits(double logit, double label) {
  return softplus(logit) - label * logit;
}

namespace {

// largest-eigenvalue eigenvector of a symmetric psd matrix
VectorXd power_iterate(const MatrixXd& C, int iters, double tol) {
  VectorXd v = VectorXd::Ones(C.rows()).normalized();
  for (int it = 0; it < iters; ++it) {
    VectorXd next = C * v;
    double norm = next.norm();
    if (norm < 1e-300) return v;  // null matrix, direction is arbitrary
    next /= norm;
    if ((next - v).norm() < tol || (next + v).norm() < tol) {
      v = next;
      break;
    }
    v = next;
  }
  return v;
}

void fix_sign(VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

}  // namespace

Pca2d pca_2d(const MatrixXd& points) {
  if (points.rows() < 3) throw std::invalid_argument("pca_2d needs >= 3 points");
  if (points.cols() < 2) throw std::invalid_argument("pca_2d needs dim >= 2");
  constexpr int kIters = 1000;
  constexpr double kTol = 1e-10;

  Pca2d out;
  out.mean = points.colwise().mean();
  MatrixXd centered = points.rowwise() - out.mean.transpose();
  MatrixXd cov = centered.transpose() * centered /
                 static_cast<double>(points.rows());

  out.component1 = power_iterate(cov, kIters, kTol);
  double lambda1 = out.component1.dot(cov * out.component1);
  MatrixXd deflated =
      cov - lambda1 * out.component1 * out.component1.transpose();
  out.component2 = power_iterate(deflated, kIters, kTol);
  // re-orthogonalize against c1 before normalizing
  out.component2 -= out.component1.dot(out.component2) * out.component1;
  double n2 = out.component2.norm();
  if (n2 > 1e-300) out.component2 /= n2;

  fix_sign(out.component1);
  fix_sign(out.component2);

  out.projections.resize(points.rows(), 2);
  out.projections.col(0) = centered * out.component1;
  out.projections.col(1) = centered * out.component2;
  return out;
}

static const char* kNetHeader = "reachrl-net-v1";

void save_net(std::ostream& os, const Net& net) {
  os << kNetHeader << "\n";
  const auto& sizes = net.spec().layer_sizes;
  os << sizes.size();
  for (int s : sizes) os << ' ' << s;
  os << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < net.params().size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", net.params()[i]);
    os << buf << "\n";
  }
}

Net load_net(std::istream& is) {
  is >> std::ws;  // tolerate the position left by a preceding load
  std::string header;
  if (!std::getline(is, header) || header != kNetHeader)
    throw std::runtime_error("bad net checkpoint header");
  std::size_t n = 0;
  is >> n;
  if (!is || n < 2 || n > 64) throw std::runtime_error("bad net layer count");
  NetSpec spec;
  spec.layer_sizes.resize(n);
  for (auto& s : spec.layer_sizes) is >> s;
  if (!is || !spec.valid()) throw std::runtime_error("bad net layer sizes");
  Net net = Net::zeros(spec);
  for (Eigen::Index i = 0; i < net.params().size(); ++i) is >> net.params()[i];
  if (!is) throw std::runtime_error("truncated net checkpoint");
  return net;
}

}  // namespace reachrl
