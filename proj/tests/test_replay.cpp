#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "qnav/replay.hpp"

using namespace qnav;

namespace {

Transition tagged(int tag) {
  Transition t;
  t.state = Eigen::VectorXd::Constant(2, tag);
  t.next_state = Eigen::VectorXd::Constant(2, tag + 0.5);
  t.action = tag % 5;
  t.reward = 0.0;
  t.done = false;
  return t;
}

int tag_of(const Transition& t) { return static_cast<int>(t.state[0]); }

}  // namespace

TEST_CASE("push counts and preserves insertion order") {
  ReplayBuffer buf(10);
  CHECK(buf.size() == 0);
  buf.push(tagged(1));
  CHECK(buf.size() == 1);
  for (int i = 2; i <= 6; ++i) buf.push(tagged(i));
  CHECK(buf.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(tag_of(buf.at(i)) == i + 1);
}

TEST_CASE("a full buffer evicts oldest-first") {
  ReplayBuffer buf(3);
  for (int i = 1; i <= 5; ++i) buf.push(tagged(i));
  CHECK(buf.size() == 3);
  CHECK(tag_of(buf.at(0)) == 3);
  CHECK(tag_of(buf.at(1)) == 4);
  CHECK(tag_of(buf.at(2)) == 5);
}

TEST_CASE("size never exceeds capacity") {
  ReplayBuffer buf(7);
  for (int i = 0; i < 100; ++i) {
    buf.push(tagged(i));
    CHECK(buf.size() <= 7);
  }
  CHECK_THROWS_AS(ReplayBuffer(0), std::invalid_argument);
}

TEST_CASE("sampling with replacement works below batch size") {
  Rng rng(3);
  ReplayBuffer buf(10);
  buf.push(tagged(42));
  auto batch = buf.sample_batch(4, rng);
  REQUIRE(batch.has_value());
  REQUIRE(batch->size() == 4);
  for (const Transition& t : *batch) CHECK(tag_of(t) == 42);

  for (int i = 0; i < 2; ++i) buf.push(tagged(i));
  CHECK(buf.sample_batch(4, rng).has_value());  // 3 stored < 4 requested

  ReplayBuffer empty(5);
  CHECK(!empty.sample_batch(1, rng).has_value());
}

TEST_CASE("seeded sampling is reproducible and does not mutate") {
  ReplayBuffer buf(50);
  for (int i = 0; i < 20; ++i) buf.push(tagged(i));
  Rng rng_a(777), rng_b(777);
  auto a = buf.sample_batch(16, rng_a);
  auto b = buf.sample_batch(16, rng_b);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  for (std::size_t i = 0; i < a->size(); ++i) {
    CHECK(tag_of((*a)[i]) == tag_of((*b)[i]));
  }
  CHECK(buf.size() == 20);
  for (int i = 0; i < 20; ++i) CHECK(tag_of(buf.at(i)) == i);
}

TEST_CASE("sampling distribution is uniform (chi-square)") {
  ReplayBuffer buf(10);
  for (int i = 0; i < 10; ++i) buf.push(tagged(i));
  Rng rng(20240810);
  constexpr int kDraws = 100000;
  int counts[10] = {};
  auto batch = buf.sample_batch(kDraws, rng);
  REQUIRE(batch.has_value());
  for (const Transition& t : *batch) ++counts[tag_of(t)];
  const double expected = kDraws / 10.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 9 degrees of freedom at significance 0.01.
  CHECK(chi2 < 21.666);
}
