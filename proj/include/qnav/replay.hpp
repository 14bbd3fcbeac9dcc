#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qnav/rng.hpp"

namespace qnav {

/// One (s, a, r, s', done) record.
struct Transition {
  Eigen::VectorXd state;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
};

/// Fixed-capacity FIFO ring with uniform with-replacement sampling.
/// Single-owner; the training loop is its only client.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
      throw std::invalid_argument("ReplayBuffer capacity must be >= 1");
    }
    storage_.reserve(capacity);
  }

  void push(Transition t) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const {
    if (i >= storage_.size()) {
      throw std::out_of_range("ReplayBuffer::at: index out of range");
    }
    const std::size_t start = storage_.size() < capacity_ ? 0 : cursor_;
    return storage_[(start + i) % storage_.size()];
  }

  /// Uniform sample with replacement; empty buffer reports not-ready so the
  /// caller can skip its train step.
  std::optional<std::vector<Transition>> sample_batch(std::size_t batch_size,
                                                      Rng& rng) const {
    if (storage_.empty()) return std::nullopt;
    std::vector<Transition> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
      batch.push_back(storage_[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(storage_.size())))]);
    }
    return batch;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t cursor_ = 0;
};

}  // namespace qnav
