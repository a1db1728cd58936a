#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "d3stereo/pyramid.hpp"
#include "d3stereo/seeds.hpp"
#include "test_util.hpp"

using namespace d3stereo;

TEST(Pkrn, Examples) {
  const std::vector<float> a{0.2f, 0.4f, 0.9f};
  const PkrnScore s = pkrn(a);
  EXPECT_EQ(s.best_d, 0);
  EXPECT_FLOAT_EQ(s.ratio, 2.0f);

  const std::vector<float> tie{0.3f, 0.3f, 0.9f};
  const PkrnScore t = pkrn(tie);
  EXPECT_EQ(t.best_d, 0);
  EXPECT_FLOAT_EQ(t.ratio, 1.0f);

  const std::vector<float> only{1.0f};
  const std::vector<std::uint8_t> flag{1};
  try {
    pkrn(only, flag);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientCandidates);
  }
  const std::vector<float> two{0.1f, 0.5f};
  const std::vector<std::uint8_t> one_masked{0, 1};
  EXPECT_THROW(pkrn(two, one_masked), Error);
}

TEST(Pkrn, ZeroCostConventions) {
  const std::vector<float> inf{0.0f, 0.5f};
  EXPECT_TRUE(std::isinf(pkrn(inf).ratio));
  const std::vector<float> both{0.0f, 0.0f, 0.5f};
  EXPECT_EQ(pkrn(both).ratio, 1.0f);
}

TEST(Pkrn, SentinelsAreSkipped) {
  const std::vector<float> c{0.05f, 0.3f, 0.6f};
  const std::vector<std::uint8_t> f{1, 0, 0};
  const PkrnScore s = pkrn(c, f);
  EXPECT_EQ(s.best_d, 1);
  EXPECT_FLOAT_EQ(s.ratio, 2.0f);
}

TEST(Lrdc, Examples) {
  DisparityMap dl(20, 1), dr(20, 1);
  dl(10, 0) = DisparityState::decisive(7);
  dr(3, 0) = DisparityState::decisive(7);
  EXPECT_TRUE(lrdc_check(dl, dr, {10, 0}, 1));
  dr(3, 0) = DisparityState::decisive(5);
  EXPECT_FALSE(lrdc_check(dl, dr, {10, 0}, 1));
  dl(4, 0) = DisparityState::decisive(5);
  EXPECT_FALSE(lrdc_check(dl, dr, {4, 0}, 1));
  dr(3, 0) = DisparityState::unknown();
  EXPECT_FALSE(lrdc_check(dl, dr, {10, 0}, 1));
}

TEST(InitSeeds, PlantedMinimaRecovered) {
  const DisparityMap truth = planted_field(64, 64, 16, 5);
  const CostVolume cl = planted_volume(truth, 16, 6);
  const CostVolume cr = right_reference(cl);
  const DisparityMap seeds = init_seeds(cl, cr, 1.1, 1);
  // Eligible: the right match has exactly one left partner.
  std::vector<int> partners(64 * 64, 0);
  for (int v = 0; v < 64; ++v) {
    for (int u = 0; u < 64; ++u) ++partners[v * 64 + u - truth(u, v).disparity()];
  }
  std::size_t eligible = 0, seeded = 0;
  for (int v = 0; v < 64; ++v) {
    for (int u = 0; u < 64; ++u) {
      const int d = truth(u, v).disparity();
      if (seeds(u, v).is_decisive()) EXPECT_EQ(seeds(u, v).disparity(), d);
      if (partners[v * 64 + u - d] != 1) continue;
      ++eligible;
      if (seeds(u, v).is_decisive()) {
        ++seeded;
        EXPECT_EQ(seeds(u, v).disparity(), d);
      }
    }
  }
  EXPECT_GE(static_cast<double>(seeded) / eligible, 0.9);
}

TEST(InitSeeds, FlatVolumeAndInfiniteGamma) {
  CostVolume flat(10, 6, 3);
  for (int v = 0; v < 6; ++v) {
    for (int u = 0; u < 10; ++u) {
      for (int d = 0; d <= 3; ++d) {
        if (u - d >= 0) flat.set(u, v, d, 0.5f);
      }
    }
  }
  EXPECT_EQ(density(init_seeds(flat, right_reference(flat), 1.05, 1)), 0.0);

  const DisparityMap truth = planted_field(32, 32, 8, 1);
  const CostVolume cl = planted_volume(truth, 8, 2);
  EXPECT_EQ(density(init_seeds(cl, right_reference(cl),
                               std::numeric_limits<double>::infinity(), 1)),
            0.0);
}

TEST(InitSeeds, DensityNonIncreasingInGamma) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const CostVolume cl = fixtures::random_volume(24, 16, 6, rng);
    const CostVolume cr = right_reference(cl);
    double previous = 1.0;
    for (const double g : {1.001, 1.01, 1.05, 1.1, 1.5, 2.0, 5.0}) {
      const double dens = density(init_seeds(cl, cr, g, 1));
      EXPECT_LE(dens, previous);
      previous = dens;
    }
  }
}

TEST(InitSeeds, EverySeedIsConsistent) {
  std::mt19937_64 rng(11);
  const CostVolume cl = fixtures::random_volume(30, 12, 8, rng);
  const CostVolume cr = right_reference(cl);
  const DisparityMap seeds = init_seeds(cl, cr, 1.05, 1);
  const DisparityMap wl = confident_wta(cl, 1.05);
  const DisparityMap wr = confident_wta(cr, 1.05);
  for (int v = 0; v < 12; ++v) {
    for (int u = 0; u < 30; ++u) {
      if (!seeds(u, v).is_decisive()) continue;
      EXPECT_EQ(seeds(u, v), wl(u, v));
      EXPECT_TRUE(lrdc_check(seeds, wr, {u, v}, 1));
    }
  }
}

TEST(InitSeeds, InvariantUnderCostScaling) {
  std::mt19937_64 rng(12);
  const CostVolume cl = fixtures::random_volume(28, 14, 7, rng);
  const DisparityMap base = init_seeds(cl, right_reference(cl), 1.05, 1);
  for (const float a : {0.5f, 0.25f}) {
    CostVolume scaled = cl;
    for (auto& c : scaled.raw_costs()) c *= a;
    EXPECT_EQ(init_seeds(scaled, right_reference(scaled), 1.05, 1), base);
  }
  // Any positive scale keeps the per-pixel argmin.
  CostVolume odd = cl;
  for (auto& c : odd.raw_costs()) c = 0.3f * c + 0.1f;
  const DisparityMap w0 = confident_wta(cl, 1.0 + 1e-9);
  const DisparityMap w1 = confident_wta(odd, 1.0 + 1e-9);
  for (std::size_t i = 0; i < w0.states().size(); ++i) {
    if (w0.states()[i].is_decisive() && w1.states()[i].is_decisive()) {
      EXPECT_EQ(w0.states()[i], w1.states()[i]);
    }
  }
}
