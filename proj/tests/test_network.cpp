#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "qnav/network.hpp"
#include "qnav/rng.hpp"

using namespace qnav;

namespace {

// Plain-loop re-implementation of the forward pass, kept free of Eigen
// arithmetic so it cannot share a bug with the code under test.
std::vector<double> forward_oracle(const Mlp& net,
                                   const std::vector<double>& input) {
  std::vector<double> h = input;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const bool last = l + 1 == net.layer_count();
    std::vector<double> next(static_cast<std::size_t>(net.dims[l + 1]), 0.0);
    for (std::size_t r = 0; r < next.size(); ++r) {
      double acc = net.biases[l][static_cast<Eigen::Index>(r)];
      for (std::size_t c = 0; c < h.size(); ++c) {
        acc += net.weights[l](static_cast<Eigen::Index>(r),
                              static_cast<Eigen::Index>(c)) *
               h[c];
      }
      next[r] = last ? acc : std::max(acc, 0.0);
    }
    h = std::move(next);
  }
  return h;
}

// Random weights plus small random biases. Nonzero biases keep pre-activations
// off the exact ReLU kink, where the loss has no derivative for a finite
// difference to agree with.
Mlp random_net(std::vector<int> dims, std::uint64_t seed) {
  Mlp net(std::move(dims));
  Rng rng(seed);
  init_weights(net, rng);
  for (auto& b : net.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-0.2, 0.2);
  }
  return net;
}

Eigen::VectorXd random_input(int n, Rng& rng) {
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
  return x;
}

double loss_at(const Mlp& net, const Eigen::VectorXd& x, int action,
               double target) {
  const double q = forward(net, x)[action];
  return (target - q) * (target - q);
}

// Central finite differences over every parameter.
bool gradients_match_fd(const Mlp& net, const Eigen::VectorXd& x, int action,
                        double target, double h = 1e-6, double tol = 1e-4) {
  const BackwardResult result = backward(net, x, action, target);
  Mlp probe = net;
  bool ok = true;
  auto check = [&](double analytic, double& param) {
    const double saved = param;
    param = saved + h;
    const double up = loss_at(probe, x, action, target);
    param = saved - h;
    const double down = loss_at(probe, x, action, target);
    param = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1.0});
    if (std::abs(analytic - fd) / denom >= tol) ok = false;
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
        check(result.grads.weights[l](r, c), probe.weights[l](r, c));
      }
      check(result.grads.biases[l][r], probe.biases[l][r]);
    }
  }
  return ok;
}

}  // namespace

TEST_CASE("forward of the zero network is zero") {
  const Mlp net({26, 256, 256, 256, 5});
  Eigen::VectorXd x = Eigen::VectorXd::Constant(26, 0.37);
  CHECK(forward(net, x).isZero(0.0));
}

TEST_CASE("forward follows a hand-wired identity path") {
  Mlp net({3, 4, 4, 2});
  // One chain of 1.0 weights from input 0 to output 1.
  net.weights[0](2, 0) = 1.0;
  net.weights[1](1, 2) = 1.0;
  net.weights[2](1, 1) = 1.0;
  Eigen::VectorXd x(3);
  x << 0.625, -3.0, 9.0;
  const Eigen::VectorXd q = forward(net, x);
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 0.625);
}

TEST_CASE("forward rejects wrong input sizes") {
  const Mlp net({4, 8, 2});
  CHECK_THROWS_AS(forward(net, Eigen::VectorXd::Zero(5)),
                  std::invalid_argument);
}

TEST_CASE("forward matches the plain-loop oracle") {
  Rng rng(123);
  for (int trial = 0; trial < 30; ++trial) {
    const Mlp net = random_net({26, 32, 24, 5}, 1000 + trial);
    const Eigen::VectorXd x = random_input(26, rng);
    const std::vector<double> expected =
        forward_oracle(net, {x.data(), x.data() + x.size()});
    const Eigen::VectorXd got = forward(net, x);
    REQUIRE(got.size() == static_cast<Eigen::Index>(expected.size()));
    for (Eigen::Index i = 0; i < got.size(); ++i) {
      CHECK(std::abs(got[i] - expected[static_cast<std::size_t>(i)]) < 1e-12);
    }
  }
}

TEST_CASE("forward_batch equals per-column forward") {
  Rng rng(77);
  const Mlp net = random_net({10, 16, 16, 4}, 42);
  Eigen::MatrixXd inputs(10, 7);
  for (int c = 0; c < 7; ++c) inputs.col(c) = random_input(10, rng);
  const Eigen::MatrixXd batch = forward_batch(net, inputs);
  for (int c = 0; c < 7; ++c) {
    CHECK((batch.col(c) - forward(net, inputs.col(c))).cwiseAbs().maxCoeff() <
          1e-14);
  }
}

TEST_CASE("backward at zero residual gives zero loss and gradients") {
  const Mlp net = random_net({8, 12, 12, 3}, 9);
  Rng rng(10);
  const Eigen::VectorXd x = random_input(8, rng);
  const double q1 = forward(net, x)[1];
  const BackwardResult result = backward(net, x, 1, q1);
  CHECK(result.loss == 0.0);
  CHECK(result.grads.global_norm() == 0.0);
}

TEST_CASE("backward touches only the chosen action's output unit") {
  const Mlp net = random_net({6, 10, 10, 5}, 17);
  Rng rng(18);
  const Eigen::VectorXd x = random_input(6, rng);
  const BackwardResult result = backward(net, x, 2, 1.5);
  const auto& out_bias_grad = result.grads.biases.back();
  for (int a = 0; a < 5; ++a) {
    if (a == 2) continue;
    CHECK(out_bias_grad[a] == 0.0);
    CHECK(result.grads.weights.back().row(a).isZero(0.0));
  }
  CHECK(out_bias_grad[2] != 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(20240810);
  int draws = 0;
  while (draws < 100) {
    const int in_dim = 3 + rng.uniform_int(8);
    const int h1 = 4 + rng.uniform_int(12);
    const int h2 = 4 + rng.uniform_int(12);
    const int out_dim = 2 + rng.uniform_int(4);
    const Mlp net = random_net({in_dim, h1, h2, out_dim}, rng.next_u64());
    const Eigen::VectorXd x = random_input(in_dim, rng);
    const int action = rng.uniform_int(out_dim);
    const double target = rng.uniform(-5.0, 5.0);
    CHECK(gradients_match_fd(net, x, action, target));
    ++draws;
  }
}

TEST_CASE("batched backward equals the average of scalar backward") {
  Rng rng(31);
  const Mlp net = random_net({12, 20, 20, 5}, 32);
  const int batch = 9;
  Eigen::MatrixXd inputs(12, batch);
  std::vector<int> actions(batch);
  std::vector<double> targets(batch);
  for (int i = 0; i < batch; ++i) {
    inputs.col(i) = random_input(12, rng);
    actions[i] = rng.uniform_int(5);
    targets[i] = rng.uniform(-3.0, 3.0);
  }
  const BackwardResult combined =
      backward_batch(net, inputs, actions, targets);

  double mean_loss = 0.0;
  Gradients mean_grads(net);
  for (int i = 0; i < batch; ++i) {
    const BackwardResult single =
        backward(net, inputs.col(i), actions[i], targets[i]);
    mean_loss += single.loss / batch;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      mean_grads.weights[l] += single.grads.weights[l] / batch;
      mean_grads.biases[l] += single.grads.biases[l] / batch;
    }
  }
  CHECK(std::abs(combined.loss - mean_loss) < 1e-10);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    CHECK((combined.grads.weights[l] - mean_grads.weights[l])
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    CHECK((combined.grads.biases[l] - mean_grads.biases[l])
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
}

TEST_CASE("adam first step on f(w) = (w-1)^2 moves by the learning rate") {
  Mlp net({1, 1});  // single weight, bias left alone
  AdamState adam(net);
  adam.learning_rate = 0.1;
  Gradients grads(net);
  grads.weights[0](0, 0) = 2.0 * (net.weights[0](0, 0) - 1.0);  // = -2
  adam_step(net, grads, adam);
  CHECK(adam.step == 1);
  // Bias correction makes the first step exactly lr * sign(gradient).
  CHECK(net.weights[0](0, 0) == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(net.biases[0][0] == 0.0);
}

TEST_CASE("adam converges on a 1-D quadratic, matching a scalar oracle") {
  // Independent scalar recurrence of the update rule.
  double w_oracle = 0.0, m = 0.0, v = 0.0;
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  int first_pass = -1;
  for (int t = 1; t <= 500; ++t) {
    const double g = 2.0 * (w_oracle - 1.0);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    w_oracle -= lr * (m / (1 - std::pow(b1, t))) /
                (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    if (first_pass < 0 && std::abs(w_oracle - 1.0) < 1e-3) first_pass = t;
  }
  REQUIRE(first_pass > 0);  // the oracle itself converges within 500 steps

  Mlp net({1, 1});
  AdamState adam(net);
  adam.learning_rate = lr;
  Gradients grads(net);
  for (int t = 0; t < 500; ++t) {
    grads.weights[0](0, 0) = 2.0 * (net.weights[0](0, 0) - 1.0);
    adam_step(net, grads, adam);
  }
  CHECK(std::abs(net.weights[0](0, 0) - 1.0) < 1e-3);
  CHECK(net.weights[0](0, 0) == doctest::Approx(w_oracle).epsilon(1e-9));
}

TEST_CASE("adam with zero gradients is a fixed point") {
  Mlp net = random_net({5, 8, 3}, 50);
  const Mlp before = net;
  AdamState adam(net);
  Gradients zero(net);
  adam_step(net, zero, adam);
  CHECK(adam.step == 1);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    CHECK(net.weights[l] == before.weights[l]);
    CHECK(net.biases[l] == before.biases[l]);
  }
}

TEST_CASE("init_weights is seeded, bounded and centered") {
  Mlp a({26, 256, 256, 256, 5});
  Mlp b(a.dims);
  Rng ra(1234), rb(1234);
  init_weights(a, ra);
  init_weights(b, rb);
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l].isZero(0.0));
  }
  const double bound0 = std::sqrt(6.0 / 26.0);
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= bound0);

  // Mean of ~10^5 uniform(-b, b) draws stays within 3 standard errors of 0.
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    const double bound = std::sqrt(6.0 / a.dims[l]);
    sum += a.weights[l].sum() / bound;  // scale layers to a common bound
    count += static_cast<std::size_t>(a.weights[l].size());
  }
  REQUIRE(count >= 100000);
  const double mean = sum / static_cast<double>(count);
  const double se = 1.0 / std::sqrt(3.0 * static_cast<double>(count));
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("copy_weights deep-copies") {
  Mlp src = random_net({7, 9, 4}, 60);
  Mlp dst({7, 9, 4});
  copy_weights(src, dst);
  Rng rng(61);
  const Eigen::VectorXd x = random_input(7, rng);
  CHECK(forward(src, x) == forward(dst, x));
  src.weights[0](0, 0) += 1.0;
  CHECK(forward(src, x) != forward(dst, x));

  Mlp other({7, 9, 5});
  CHECK_THROWS_AS(copy_weights(src, other), std::invalid_argument);
}

TEST_CASE("gradient clipping rescales to the requested norm") {
  Mlp net({2, 3, 2});
  Gradients grads(net);
  grads.weights[0].setConstant(5.0);
  const double before = grads.global_norm();
  REQUIRE(before > 10.0);
  const double reported = clip_gradient_norm(grads, 10.0);
  CHECK(reported == doctest::Approx(before));
  CHECK(grads.global_norm() == doctest::Approx(10.0));

  // Below the bound nothing changes.
  Gradients small(net);
  small.weights[0].setConstant(0.1);
  const double small_norm = small.global_norm();
  CHECK(clip_gradient_norm(small, 10.0) == doctest::Approx(small_norm));
  CHECK(small.global_norm() == doctest::Approx(small_norm));
}
