#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "evacnav/random.hpp"
#include "evacnav/rnn.hpp"
#include "oracles.hpp"

using namespace evacnav;

namespace {

void expect_invariants(const RandomNeuralNetwork& n) {
  for (std::size_t i = 0; i < n.size(); ++i) {
    EXPECT_EQ(n.w_plus(i, i), 0.0);
    EXPECT_EQ(n.w_minus(i, i), 0.0);
    EXPECT_GE(n.q(i), 0.0);
    EXPECT_LT(n.q(i), 1.0);
    for (std::size_t j = 0; j < n.size(); ++j) {
      EXPECT_GE(n.w_plus(i, j), 0.0);
      EXPECT_GE(n.w_minus(i, j), 0.0);
    }
  }
  EXPECT_GE(n.threshold(), 0.0);
}

struct Weights {
  std::size_t m;
  std::vector<double> wp, wm, big, small;
};

Weights random_weights(Rng& rng, std::size_t m) {
  Weights w{m, std::vector<double>(m * m), std::vector<double>(m * m), std::vector<double>(m), std::vector<double>(m)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) {
        w.wp[i * m + j] = rng.uniform() * 2;
        w.wm[i * m + j] = rng.uniform() * 2;
      }
  for (std::size_t i = 0; i < m; ++i) {
    w.big[i] = 0.1 + rng.uniform();
    w.small[i] = rng.uniform() * 0.5;
  }
  return w;
}

}  // namespace

TEST(Rnn, SymmetricStart) {
  for (std::size_t m : {2u, 3u, 5u}) {
    RandomNeuralNetwork n(m);
    expect_invariants(n);
    EXPECT_EQ(n.threshold(), 0.0);
    for (std::size_t i = 1; i < m; ++i) EXPECT_NEAR(n.q(i), n.q(0), 1e-12);
    EXPECT_EQ(n.w_plus(0, 1), 0.5);
    EXPECT_EQ(n.external_excitation(0), 1.0);
    EXPECT_EQ(n.external_inhibition(0), 0.0);
  }
  EXPECT_THROW(RandomNeuralNetwork(0), PreconditionError);
}

TEST(Rnn, SingleNeuron) {
  RandomNeuralNetwork n(1);
  EXPECT_EQ(n.q(0), 0.9999);  // no links: zero denominator takes the cap
  Rng rng(1);
  for (int k = 0; k < 20; ++k) EXPECT_EQ(n.select(0.5, {false}, rng), 0u);
  n.reinforce(0, 2.0);
  EXPECT_EQ(n.w_plus(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(n.threshold(), 0.2 * 2.0);
}

TEST(Rnn, ClampPath) {
  const auto n = RandomNeuralNetwork::from_weights(3, std::vector<double>(9, 0.0), std::vector<double>(9, 0.0),
                                                   {1, 1, 1}, {0, 0, 0});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(n.q(i), 0.9999);
}

TEST(Rnn, SolveMatchesLongIteration) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    const std::size_t m = 3 + rng.below(3);
    const auto w = random_weights(rng, m);
    const auto n = RandomNeuralNetwork::from_weights(m, w.wp, w.wm, w.big, w.small);
    const auto ref = oracle::rnn_fixed_point(m, w.wp, w.wm, w.big, w.small);
    for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(n.q(i), ref[i], 1e-5) << seed;
  }
}

TEST(Rnn, SolveIsIdempotent) {
  Rng rng(3);
  const auto w = random_weights(rng, 4);
  auto n = RandomNeuralNetwork::from_weights(4, w.wp, w.wm, w.big, w.small);
  const std::vector<double> before(n.excitation().begin(), n.excitation().end());
  n.solve();
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(n.q(i), before[i], 1e-6);
}

TEST(Rnn, NonConvergenceReportsResidual) {
  RnnParams p;
  p.max_iterations = 1;
  Rng rng(8);
  const auto w = random_weights(rng, 3);
  try {
    RandomNeuralNetwork::from_weights(3, w.wp, w.wm, w.big, w.small, p);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(Rnn, RepeatedHighRewardsMakeWinnerDominant) {
  RandomNeuralNetwork n(4);
  for (int k = 0; k < 5; ++k) n.reinforce(1, 2.0);
  for (std::size_t i = 0; i < 4; ++i)
    if (i != 1) {
      EXPECT_GT(n.q(1), n.q(i));
    }
}

TEST(Rnn, LowRewardPunishesWinner) {
  RandomNeuralNetwork n(3);
  for (int k = 0; k < 5; ++k) n.reinforce(0, 5.0);
  const double before = n.q(1);
  ASSERT_LT(0.1, n.threshold());
  n.reinforce(1, 0.1);
  EXPECT_LT(n.q(1), before);
}

TEST(Rnn, ReinforceKeepsInvariantsAndRowRates) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    const std::size_t m = 2 + rng.below(5);
    const auto w = random_weights(rng, m);
    auto n = RandomNeuralNetwork::from_weights(m, w.wp, w.wm, w.big, w.small);
    for (int k = 0; k < 20; ++k) {
      std::vector<double> rates(m);
      for (std::size_t i = 0; i < m; ++i) rates[i] = n.firing_rate(i);
      const double prev_t = n.threshold();
      const double r = 0.05 + rng.uniform() * 3;
      n.reinforce(rng.below(m), r);
      expect_invariants(n);
      for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(n.firing_rate(i), rates[i], 1e-9 * rates[i]);
      EXPECT_DOUBLE_EQ(n.threshold(), 0.8 * prev_t + 0.2 * r);
    }
  }
}

TEST(Rnn, RewardMonotonicityStatistical) {
  int greedy = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    const std::size_t m = 2 + rng.below(5);
    RandomNeuralNetwork n(m);
    const std::size_t target = rng.below(m);
    // a constant reward never falls below the running threshold, so every call rewards
    const double r = 0.5 + 4.5 * rng.uniform();
    for (int k = 0; k < 20; ++k) n.reinforce(target, r);
    greedy += n.select(0.0, std::vector<bool>(m, false), rng) == target;
  }
  EXPECT_GE(greedy, 95);
}

TEST(Rnn, SelectGreedyAndMasking) {
  const auto n = RandomNeuralNetwork::from_weights(3, std::vector<double>(9, 0.0), std::vector<double>(9, 0.0),
                                                   {0.2, 0.9, 0.5}, {1, 0, 0});
  Rng rng(1);
  // q = big / small except neurons with zero denominator, which sit at the cap
  EXPECT_EQ(n.select(0.0, {false, false, false}, rng), 1u);
  EXPECT_EQ(n.select(0.0, {false, true, false}, rng), 2u);
  EXPECT_THROW(n.select(0.0, {true, true, true}, rng), PreconditionError);
  EXPECT_THROW(n.select(0.0, {false}, rng), PreconditionError);
  RandomNeuralNetwork tie(3);
  EXPECT_EQ(tie.select(0.0, {false, false, false}, rng), 0u);
}

TEST(Rnn, PureExplorationIsUniform) {
  RandomNeuralNetwork n(4);
  for (int k = 0; k < 3; ++k) n.reinforce(2, 1.0);
  Rng rng(2024);
  const std::vector<bool> forbidden{false, true, false, false};
  std::vector<int> counts(4, 0);
  const int draws = 10'000;
  for (int k = 0; k < draws; ++k) ++counts[n.select(1.0, forbidden, rng)];
  EXPECT_EQ(counts[1], 0);
  const double p = 1.0 / 3.0;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (std::size_t i : {0u, 2u, 3u}) EXPECT_NEAR(counts[i], draws * p, 3 * sigma) << i;
}

TEST(Rnn, RemapKeepsInheritedLinks) {
  RandomNeuralNetwork n(3);
  n.reinforce(2, 1.5);
  const std::vector<std::ptrdiff_t> origin{2, -1, 0};
  const auto r = n.remapped(origin);
  EXPECT_EQ(r.size(), 3u);
  EXPECT_EQ(r.w_plus(0, 2), n.w_plus(2, 0));
  EXPECT_EQ(r.w_minus(2, 0), n.w_minus(0, 2));
  EXPECT_EQ(r.w_plus(0, 1), 0.5);
  EXPECT_EQ(r.threshold(), n.threshold());
  expect_invariants(r);
}
