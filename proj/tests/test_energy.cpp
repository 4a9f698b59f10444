#include <gtest/gtest.h>

#include <cmath>

#include "evacnav/energy.hpp"
#include "evacnav/random.hpp"

using namespace evacnav;

TEST(Energy, TableExamples) {
  const EnergyModel m;
  EXPECT_NEAR(tx_energy(m, Radio::threeg, Direction::upload, 10'000), 3.375, 3.375e-9);
  EXPECT_NEAR(tx_energy(m, Radio::bluetooth, Direction::upload, 10'000), 1.2012, 1.2012e-9);
  EXPECT_NEAR(tx_energy(m, Radio::threeg, Direction::upload, 500'000), 168.75, 168.75e-9);
  for (Radio r : {Radio::threeg, Radio::bluetooth})
    for (Direction d : {Direction::upload, Direction::download}) EXPECT_EQ(tx_energy(m, r, d, 0), 0.0);
  EXPECT_DOUBLE_EQ(tx_time(m, Radio::threeg, 250'000), 1.0);
  EXPECT_DOUBLE_EQ(tx_time(m, Radio::bluetooth, 125'000), 1.0);
  EXPECT_EQ(tx_time(m, Radio::threeg, 0), 0.0);
}

TEST(Energy, LinearInBytes) {
  const EnergyModel m;
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const std::uint64_t x = 1 + rng.below(1'000'000);
    const std::uint64_t k = 1 + rng.below(50);
    for (Radio r : {Radio::threeg, Radio::bluetooth})
      for (Direction d : {Direction::upload, Direction::download}) {
        const double a = tx_energy(m, r, d, k * x);
        const double b = static_cast<double>(k) * tx_energy(m, r, d, x);
        EXPECT_NEAR(a, b, 1e-9 * b);
      }
  }
}

TEST(Energy, DebitExamples) {
  Battery a(100, 100);
  auto r = a.debit(30);
  EXPECT_FALSE(r.drained);
  EXPECT_DOUBLE_EQ(a.remaining_j(), 70.0);

  Battery b(10, 100);
  r = b.debit(10);
  EXPECT_TRUE(r.drained);
  EXPECT_EQ(b.remaining_j(), 0.0);

  Battery c(5, 100);
  r = c.debit(20);
  EXPECT_TRUE(r.drained);
  EXPECT_EQ(r.debited, to_nanojoules(5.0));
  EXPECT_EQ(c.remaining_j(), 0.0);

  EXPECT_THROW(c.debit(-1), PreconditionError);
  EXPECT_THROW(Battery(5, 4), PreconditionError);
}

TEST(Energy, DebitsBalanceExactly) {
  Rng rng(9);
  Battery b(1500, 3000);
  const Nanojoules start = b.remaining_nj();
  Nanojoules spent = 0;
  while (!b.empty()) {
    const auto r = b.debit(rng.uniform() * 200);
    spent += r.debited;
    EXPECT_GE(b.remaining_nj(), 0);
  }
  EXPECT_EQ(spent, start);
}

TEST(Energy, BatterySampling) {
  const BatteryParams p;
  Rng rng(42);
  double sum = 0;
  const int n = 10'000;
  for (int i = 0; i < n; ++i) {
    const Battery b = sample_initial_battery(rng, p);
    EXPECT_GE(b.remaining_j(), p.min_j);
    EXPECT_LE(b.remaining_j(), p.max_j);
    EXPECT_EQ(b.capacity_j(), p.max_j);
    sum += b.remaining_j();
  }
  EXPECT_NEAR(sum / n, p.mean_j, 0.05 * p.mean_j);
}

TEST(Energy, DegenerateSampling) {
  BatteryParams p;
  p.sd_j = 0;
  Rng rng(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_initial_battery(rng, p).remaining_j(), p.mean_j);
  p.min_j = 0;
  EXPECT_THROW(sample_initial_battery(rng, p), ConfigError);
}

TEST(Energy, NormalDrawMoments) {
  Rng rng(7);
  double s = 0, s2 = 0;
  const int n = 20'000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(0.0, 1.0);
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.03);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

TEST(Energy, ModelValidation) {
  EnergyModel m;
  m.bluetooth_rate_bps = 0;
  EXPECT_THROW(m.validate(), ConfigError);
}
