#include "qnav/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qnav {

namespace {

void check_same_shape(const Mlp& net, const Gradients& grads) {
  if (grads.weights.size() != net.weights.size()) {
    throw std::invalid_argument("gradient/network layer count mismatch");
  }
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    if (grads.weights[l].rows() != net.weights[l].rows() ||
        grads.weights[l].cols() != net.weights[l].cols() ||
        grads.biases[l].size() != net.biases[l].size()) {
      throw std::invalid_argument("gradient/network shape mismatch at layer " +
                                  std::to_string(l));
    }
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_dims) : dims(std::move(layer_dims)) {
  if (dims.size() < 2) {
    throw std::invalid_argument("Mlp needs at least input and output dims");
  }
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("Mlp layer dims must be positive");
  }
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    weights.emplace_back(Eigen::MatrixXd::Zero(dims[l + 1], dims[l]));
    biases.emplace_back(Eigen::VectorXd::Zero(dims[l + 1]));
  }
}

Gradients::Gradients(const Mlp& net) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    weights.emplace_back(
        Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    biases.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
}

void Gradients::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

double Gradients::global_norm() const {
  double sum = 0.0;
  for (const auto& w : weights) sum += w.squaredNorm();
  for (const auto& b : biases) sum += b.squaredNorm();
  return std::sqrt(sum);
}

AdamState::AdamState(const Mlp& net) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    m_weights.emplace_back(
        Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    v_weights.emplace_back(m_weights.back());
    m_biases.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    v_biases.emplace_back(m_biases.back());
  }
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input) {
  if (input.size() != net.input_dim()) {
    throw std::invalid_argument("forward: input has " +
                                std::to_string(input.size()) +
                                " values, network expects " +
                                std::to_string(net.input_dim()));
  }
  Eigen::VectorXd h = input;
  const std::size_t last = net.layer_count() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    h = ((net.weights[l] * h + net.biases[l]).array().max(0.0)).matrix();
  }
  return net.weights[last] * h + net.biases[last];
}

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != net.input_dim()) {
    throw std::invalid_argument("forward_batch: input row count mismatch");
  }
  Eigen::MatrixXd h = inputs;
  const std::size_t last = net.layer_count() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    h = (((net.weights[l] * h).colwise() + net.biases[l]).array().max(0.0))
            .matrix();
  }
  return (net.weights[last] * h).colwise() + net.biases[last];
}

BackwardResult backward(const Mlp& net, const Eigen::VectorXd& input,
                        int action_index, double td_target) {
  const Eigen::MatrixXd x = input;
  const int actions[1] = {action_index};
  const double targets[1] = {td_target};
  return backward_batch(net, x, actions, targets);
}

BackwardResult backward_batch(const Mlp& net, const Eigen::MatrixXd& inputs,
                              std::span<const int> action_indices,
                              std::span<const double> td_targets) {
  const auto batch = static_cast<Eigen::Index>(action_indices.size());
  if (batch == 0 || inputs.cols() != batch ||
      td_targets.size() != action_indices.size()) {
    throw std::invalid_argument("backward_batch: batch size mismatch");
  }
  if (inputs.rows() != net.input_dim()) {
    throw std::invalid_argument("backward_batch: input row count mismatch");
  }
  for (int a : action_indices) {
    if (a < 0 || a >= net.output_dim()) {
      throw std::invalid_argument("backward_batch: action index out of range");
    }
  }

  // Forward, keeping every post-activation layer for the backward sweep.
  const std::size_t layers = net.layer_count();
  std::vector<Eigen::MatrixXd> activations(layers + 1);
  activations[0] = inputs;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    activations[l + 1] =
        (((net.weights[l] * activations[l]).colwise() + net.biases[l])
             .array()
             .max(0.0))
            .matrix();
  }
  activations[layers] =
      (net.weights[layers - 1] * activations[layers - 1]).colwise() +
      net.biases[layers - 1];

  // d(mean loss)/dq is nonzero only at each sample's chosen action.
  const double inv_batch = 1.0 / static_cast<double>(batch);
  Eigen::MatrixXd delta =
      Eigen::MatrixXd::Zero(net.output_dim(), batch);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const double residual =
        activations[layers](action_indices[i], i) - td_targets[i];
    loss += residual * residual;
    delta(action_indices[i], i) = 2.0 * residual * inv_batch;
  }
  loss *= inv_batch;

  BackwardResult result{loss, Gradients(net)};
  for (std::size_t l = layers; l-- > 0;) {
    result.grads.weights[l].noalias() = delta * activations[l].transpose();
    result.grads.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      // ReLU passes gradient only where the activation is positive.
      delta = ((net.weights[l].transpose() * delta).array() *
               (activations[l].array() > 0.0).cast<double>())
                  .matrix();
    }
  }
  return result;
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& state) {
  check_same_shape(net, grads);
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = state.beta1 * m + (1.0 - state.beta1) * grad;
    v.array() =
        state.beta2 * v.array() + (1.0 - state.beta2) * grad.array().square();
    param.array() -= state.learning_rate * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + state.epsilon);
  };
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    update(net.weights[l], grads.weights[l], state.m_weights[l],
           state.v_weights[l]);
    update(net.biases[l], grads.biases[l], state.m_biases[l],
           state.v_biases[l]);
  }
}

void init_weights(Mlp& net, Rng& rng) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const double bound = std::sqrt(6.0 / double(net.dims[l]));
    for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
        net.weights[l](r, c) = rng.uniform(-bound, bound);
      }
    }
    net.biases[l].setZero();
  }
}

void copy_weights(const Mlp& src, Mlp& dst) {
  if (src.dims != dst.dims) {
    throw std::invalid_argument("copy_weights: layer dims mismatch");
  }
  dst.weights = src.weights;
  dst.biases = src.biases;
}

double clip_gradient_norm(Gradients& grads, double max_norm) {
  const double norm = grads.global_norm();
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& w : grads.weights) w *= scale;
    for (auto& b : grads.biases) b *= scale;
  }
  return norm;
}

}  // namespace qnav
