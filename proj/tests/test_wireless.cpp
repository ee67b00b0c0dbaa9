#include "mafl/wireless.hpp"

#include <gtest/gtest.h>

#include "mafl/autodiff.hpp"

using namespace mafl;

TEST(ChannelGain, UnitMeanFadingAtReference) {
  ChannelParams p;
  p.fading_seed = 3;
  auto rng = stream_rng(3);
  double acc = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) acc += channel_gain(p.ref_distance_m, p, rng);
  const double expect = std::pow(10.0, p.pathloss_ref_db / 10.0);
  EXPECT_LT(std::abs(acc / n - expect) / expect, 0.02);
}

TEST(ChannelGain, PathlossSlope) {
  ChannelParams p;
  auto rng1 = stream_rng(4);
  auto rng2 = stream_rng(5);
  const int n = 100000;
  double a = 0.0, b = 0.0;
  for (int k = 0; k < n; ++k) {
    a += channel_gain(1.0, p, rng1);
    b += channel_gain(10.0, p, rng2);
  }
  // 30 dB below at 10x distance with exponent 3.
  EXPECT_LT(std::abs((a / b) - 1000.0) / 1000.0, 0.03);
}

TEST(ChannelGain, DeterministicUnderKeyAndGuards) {
  ChannelParams p;
  p.fading_seed = 11;
  const double g1 = channel_gain_at(5.0, p, 2, 7, LinkDir::Uplink);
  const double g2 = channel_gain_at(5.0, p, 2, 7, LinkDir::Uplink);
  EXPECT_EQ(g1, g2);
  EXPECT_NE(g1, channel_gain_at(5.0, p, 2, 7, LinkDir::Downlink));
  EXPECT_NE(g1, channel_gain_at(5.0, p, 2, 8, LinkDir::Uplink));
  auto rng = stream_rng(1);
  EXPECT_THROW(channel_gain(0.5, p, rng), std::invalid_argument);
}

TEST(LinkRate, KnownPoints) {
  // SNR argument 1 -> r = B.
  EXPECT_DOUBLE_EQ(link_rate(1e6, 1e-20 * 1e6, 1.0, 1e-20), 1e6);
  EXPECT_DOUBLE_EQ(link_rate(1e6, 0.0, 1.0, 1e-20), 0.0);
  // B=1e6, SNR arg 3 -> log2(4) = 2 -> 2e6.
  EXPECT_DOUBLE_EQ(link_rate(1e6, 3.0 * 1e-20 * 1e6, 1.0, 1e-20), 2e6);
}

TEST(LinkRate, MonotoneInGainAndPower) {
  auto rng = stream_rng(9);
  for (int t = 0; t < 100; ++t) {
    const double b = uniform_in(rng, 1e4, 1e7);
    const double g = uniform_in(rng, 1e-12, 1e-6);
    const double p = uniform_in(rng, 0.01, 1.0);
    EXPECT_LT(link_rate(b, g, p, 1e-20), link_rate(b, g * 1.5, p, 1e-20));
    EXPECT_LT(link_rate(b, g, p, 1e-20), link_rate(b, g, p * 1.5, 1e-20));
  }
}

TEST(ComputeTimeEnergy, HandValuesAndScaling) {
  EXPECT_DOUBLE_EQ(compute_time(0, 1000.0, 2, 10, 1e6), 0.0);
  EXPECT_DOUBLE_EQ(compute_time(1, 1000.0, 2, 10, 1e6), 0.02);
  EXPECT_DOUBLE_EQ(compute_time(1, 1000.0, 2, 10, 2e6), 0.01);

  EXPECT_DOUBLE_EQ(compute_energy(0, 1e-21, 2, 1000.0, 10, 1e6), 0.0);
  EXPECT_NEAR(compute_energy(1, 1e-21, 2, 1000.0, 10, 1e6), 2e-5, 1e-18);
  // doubling f quadruples E and halves T
  EXPECT_NEAR(compute_energy(1, 1e-21, 2, 1000.0, 10, 2e6) /
                  compute_energy(1, 1e-21, 2, 1000.0, 10, 1e6),
              4.0, 1e-12);
  EXPECT_THROW(compute_time(1, 1.0, 1, 1, 0.0), std::invalid_argument);
}

TEST(ComputeTimeEnergy, EnergyDelayProductIdentity) {
  auto rng = stream_rng(10);
  for (int t = 0; t < 100; ++t) {
    const double xi = uniform_in(rng, 1e-22, 1e-19);
    const double a = uniform_in(rng, 100.0, 5000.0);
    const int e = 1 + static_cast<int>(rng() % 8);
    const int B = 1 + static_cast<int>(rng() % 50);
    const double f = uniform_in(rng, 1e7, 1e9);
    const double T = compute_time(1, a, e, B, f);
    const double E = compute_energy(1, xi, e, a, B, f);
    EXPECT_LT(rel_diff(E * T, xi * (e * a * B) * (e * a * B) * f), 1e-9);
  }
}

TEST(TransferCost, HandValuesAndPowerIdentity) {
  auto [t0, e0] = transfer_cost(0, 4096, 7850, 1e6, 0.25);
  EXPECT_EQ(t0, 0.0);
  EXPECT_EQ(e0, 0.0);
  auto [t, e] = transfer_cost(1, 4096, 7850, 1e6, 0.25);
  EXPECT_NEAR(t, 32.1536, 1e-9);
  EXPECT_NEAR(e, 8.0384, 1e-9);
  EXPECT_NEAR(e / t, 0.25, 1e-12);
  EXPECT_THROW(transfer_cost(1, 1, 1, 0.0, 1.0), std::runtime_error);
}

TEST(LocalPeriod, GatingAndSums) {
  EXPECT_DOUBLE_EQ(local_period(5.0, 0, 0.0, 0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(local_period(1.0, 1, 1.0, 1.0, 1.0), 4.0);
  EXPECT_NEAR(local_period(2.0, 1, 0.02, 32.15, 3.2), 37.37, 1e-12);
  EXPECT_THROW(local_period(-1.0, 1, 0.0, 0.0, 0.0), std::invalid_argument);
}
