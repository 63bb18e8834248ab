#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

namespace srlf {

/// Fully connected network with ReLU hidden layers and a linear output.
/// Batches are laid out one sample per column.
class Mlp {
 public:
  struct Layer {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
  };
  /// Pre-activations of every layer plus the input, kept for backprop.
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  /// He-style Gaussian initialisation; the output layer is additionally
  /// scaled by `output_scale`.
  void init(std::mt19937_64& rng, double output_scale = 1.0);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;

  /// Gradient of sum(dy .* y) with respect to every parameter.
  std::vector<Layer> backward(const Cache& cache, const Eigen::MatrixXd& dy) const;

  const std::vector<int>& sizes() const { return sizes_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  int num_params() const;
  Eigen::VectorXd flat() const;
  void set_flat(const Eigen::VectorXd& theta);
  bool all_finite() const;

  /// Zero-valued gradient buffer matching this network's shape.
  std::vector<Layer> zeros_like() const;

 private:
  std::vector<int> sizes_;
  std::vector<Layer> layers_;
};

using MlpGrad = std::vector<Mlp::Layer>;

double squared_norm(const MlpGrad& g);
void scale(MlpGrad& g, double s);

/// Adam with bias correction, one instance per network.
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step(Mlp& net, const MlpGrad& grad);
  double lr() const { return lr_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  MlpGrad m_, v_;
};

}  // namespace srlf
