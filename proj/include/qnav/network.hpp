#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "qnav/rng.hpp"

namespace qnav {

/// Fully-connected network with ReLU hidden layers and a linear output layer.
/// weights[l] maps layer l (dims[l] wide) to layer l+1; double precision
/// throughout so gradients can be checked against finite differences tightly.
struct Mlp {
  std::vector<int> dims;
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: dims[l+1] x dims[l]
  std::vector<Eigen::VectorXd> biases;

  explicit Mlp(std::vector<int> layer_dims);

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  std::size_t layer_count() const { return weights.size(); }
};

/// Per-parameter partial derivatives, shape-matched to an Mlp.
struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  explicit Gradients(const Mlp& net);
  void set_zero();
  double global_norm() const;
};

struct AdamState {
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
  std::int64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(const Mlp& net);
};

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input);

/// Batched forward pass; inputs and outputs are one column per sample.
Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs);

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
};

/// Loss (td_target - q[action_index])^2 for a single input, with exact
/// analytic gradients. Only the chosen action's output unit carries error.
BackwardResult backward(const Mlp& net, const Eigen::VectorXd& input,
                        int action_index, double td_target);

/// Batched equivalent: mean loss over the columns, gradients averaged.
BackwardResult backward_batch(const Mlp& net, const Eigen::MatrixXd& inputs,
                              std::span<const int> action_indices,
                              std::span<const double> td_targets);

/// Bias-corrected Adam update in place; increments state.step.
void adam_step(Mlp& net, const Gradients& grads, AdamState& state);

/// He-uniform weights (bound sqrt(6/fan_in)), zero biases.
void init_weights(Mlp& net, Rng& rng);

void copy_weights(const Mlp& src, Mlp& dst);

/// Scales all gradients so the global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_gradient_norm(Gradients& grads, double max_norm);

}  // namespace qnav
