#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowcast/common.hpp"
#include "flowcast/datastore.hpp"

namespace flowcast::nn {

enum class Activation { Tanh, Relu };
enum class Penalty { None, L2, L1 };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct NetConfig {
  int input_dim = 0;
  std::vector<int> hidden_widths;  // empty = pure linear model
  Activation activation = Activation::Tanh;
  int output_dim = 1;
  Penalty penalty_kind = Penalty::None;
  double penalty_weight = 0.0;
  double dropout_p = 0.0;       // drop probability for input/hidden units
  double learning_rate = 0.01;  // eta_t = eta0 / (1 + decay * t)
  double lr_decay = 1e-4;
  int batch_size = 32;
  int epochs = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Feed-forward net: hidden layers apply affine-then-activation, the final
/// layer is affine only. weights[l] has shape [N_l x N_{l-1}].
struct DeepNet {
  NetConfig config;
  std::vector<Eigen::MatrixXd> weights;  // hidden layers then output layer
  std::vector<Eigen::VectorXd> biases;
  std::vector<double> train_trace;  // per-epoch data MSE on the train set
  std::vector<double> valid_trace;  // per-epoch MSE on the validation set
  bool dropout_scaled = false;      // inference scaling baked into weights

  int n_hidden() const { return static_cast<int>(config.hidden_widths.size()); }
  std::size_t parameter_count() const;
};

/// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases;
/// bit-deterministic given config.seed.
DeepNet init_network(const NetConfig& config);

struct ForwardResult {
  Eigen::VectorXd prediction;
  std::vector<Eigen::VectorXd> activations;  // post-activation per hidden layer
};
ForwardResult forward(const DeepNet& net, const Eigen::VectorXd& x);

/// Per-unit keep masks (1 keeps a unit, 0 silences it forward and backward).
struct DropoutMask {
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> hidden;
};
DropoutMask draw_dropout_mask(const NetConfig& config, Rng& rng);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Loss = mean over batch rows of ||y - yhat||^2, plus
/// penalty_weight * phi(w, b) (phi = sum of squares for L2, sum of
/// magnitudes for L1, with subgradient 0 at 0). X/Y rows are samples.
std::pair<double, Gradients> loss_and_gradients(
    const DeepNet& net, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
    const DropoutMask* mask = nullptr);

/// Mini-batch SGD with per-step dropout masks and best-validation-epoch
/// checkpointing. On completion (when dropout is active) weights are scaled
/// by (1 - p) for inference and dropout_scaled is set.
DeepNet sgd_train(DeepNet net, const data::LagDesign& train,
                  const data::LagDesign& valid);

/// p(1-p) * sum_j (X^T X)_jj w_j^2 — the ridge term that makes
/// E||y - X(D*w)||^2 over keep masks D ~ Ber(p) equal ||y - pXw||^2 + penalty.
double dropout_ridge_penalty(const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& w, double p);

/// Row-wise forward pass over a design/matrix (inference mode).
Eigen::MatrixXd predict(const DeepNet& net, const Eigen::MatrixXd& X);
Eigen::MatrixXd predict(const DeepNet& net, const data::LagDesign& design);

void save_json(const DeepNet& net, const std::string& path);
DeepNet load_json(const std::string& path);

}  // namespace flowcast::nn
