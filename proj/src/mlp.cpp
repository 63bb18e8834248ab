#include "srlf/mlp.hpp"

#include <cmath>

#include "srlf/types.hpp"

namespace srlf {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw InvalidInput("mlp: need at least two layer sizes");
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    layers_.push_back({Eigen::MatrixXd::Zero(sizes_[i + 1], sizes_[i]),
                       Eigen::VectorXd::Zero(sizes_[i + 1])});
  }
}

void Mlp::init(std::mt19937_64& rng, double output_scale) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    std::normal_distribution<double> dist(
        0.0, std::sqrt(2.0 / static_cast<double>(layer.w.cols())));
    const double s = l + 1 == layers_.size() ? output_scale : 1.0;
    for (Eigen::Index j = 0; j < layer.w.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.w.rows(); ++i)
        layer.w(i, j) = s * dist(rng);
    layer.b.setZero();
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.rows() != sizes_.front()) throw InvalidInput("mlp: input width mismatch");
  if (cache) cache->inputs.clear();
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (cache) cache->inputs.push_back(a);
    Eigen::MatrixXd z = layers_[l].w * a;
    z.colwise() += layers_[l].b;
    if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

MlpGrad Mlp::backward(const Cache& cache, const Eigen::MatrixXd& dy) const {
  MlpGrad grad(layers_.size());
  Eigen::MatrixXd delta = dy;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Eigen::MatrixXd& in = cache.inputs[l];
    grad[l].w = delta * in.transpose();
    grad[l].b = delta.rowwise().sum();
    if (l > 0) {
      // `in` is the ReLU output of layer l-1, positive exactly where the
      // pre-activation was.
      delta = (layers_[l].w.transpose() * delta).cwiseProduct(
          (in.array() > 0.0).cast<double>().matrix());
    }
  }
  return grad;
}

int Mlp::num_params() const {
  int n = 0;
  for (const Layer& l : layers_) n += static_cast<int>(l.w.size() + l.b.size());
  return n;
}

Eigen::VectorXd Mlp::flat() const {
  Eigen::VectorXd theta(num_params());
  Eigen::Index k = 0;
  for (const Layer& l : layers_) {
    theta.segment(k, l.w.size()) = l.w.reshaped();
    k += l.w.size();
    theta.segment(k, l.b.size()) = l.b;
    k += l.b.size();
  }
  return theta;
}

void Mlp::set_flat(const Eigen::VectorXd& theta) {
  if (theta.size() != num_params()) throw InvalidInput("mlp: flat size mismatch");
  Eigen::Index k = 0;
  for (Layer& l : layers_) {
    l.w.reshaped() = theta.segment(k, l.w.size());
    k += l.w.size();
    l.b = theta.segment(k, l.b.size());
    k += l.b.size();
  }
}

bool Mlp::all_finite() const {
  for (const Layer& l : layers_)
    if (!l.w.allFinite() || !l.b.allFinite()) return false;
  return true;
}

MlpGrad Mlp::zeros_like() const {
  MlpGrad g;
  for (const Layer& l : layers_)
    g.push_back({Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()),
                 Eigen::VectorXd::Zero(l.b.size())});
  return g;
}

double squared_norm(const MlpGrad& g) {
  double s = 0.0;
  for (const auto& l : g) s += l.w.squaredNorm() + l.b.squaredNorm();
  return s;
}

void scale(MlpGrad& g, double s) {
  for (auto& l : g) {
    l.w *= s;
    l.b *= s;
  }
}

Adam::Adam(const Mlp& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(net.zeros_like()), v_(net.zeros_like()) {}

void Adam::step(Mlp& net, const MlpGrad& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    m_[l].w = beta1_ * m_[l].w + (1.0 - beta1_) * grad[l].w;
    m_[l].b = beta1_ * m_[l].b + (1.0 - beta1_) * grad[l].b;
    v_[l].w = beta2_ * v_[l].w + (1.0 - beta2_) * grad[l].w.cwiseAbs2();
    v_[l].b = beta2_ * v_[l].b + (1.0 - beta2_) * grad[l].b.cwiseAbs2();
    layers[l].w.array() -= lr_ * (m_[l].w.array() / c1) /
                           ((v_[l].w.array() / c2).sqrt() + eps_);
    layers[l].b.array() -= lr_ * (m_[l].b.array() / c1) /
                           ((v_[l].b.array() / c2).sqrt() + eps_);
  }
}

}  // namespace srlf
