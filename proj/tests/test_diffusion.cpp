#include <gtest/gtest.h>

#include <random>

#include "d3stereo/diffusion.hpp"
#include "d3stereo/parallel.hpp"
#include "d3stereo/pyramid.hpp"
#include "test_util.hpp"

using namespace d3stereo;

namespace {

CostVolume curve_volume(int w, int d_max, const std::vector<float>& curve) {
  CostVolume vol(w, 1, d_max);
  for (int u = 0; u < w; ++u) {
    for (int d = 0; d <= d_max; ++d) {
      if (u - d >= 0) vol.set(u, 0, d, curve[static_cast<std::size_t>(d)]);
    }
  }
  return vol;
}

int full_wta(const CostVolume& vol, int u, int v) {
  int best = -1;
  for (int d = 0; d <= vol.d_max(); ++d) {
    if (vol.is_sentinel(u, v, d)) continue;
    if (best < 0 || vol.cost(u, v, d) < vol.cost(u, v, best)) best = d;
  }
  return best;
}

DisparityMap sparse_subset(const DisparityMap& truth, double fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(fraction);
  DisparityMap out(truth.width(), truth.height());
  for (int v = 0; v < truth.height(); ++v) {
    for (int u = 0; u < truth.width(); ++u) {
      if (keep(rng) && u - truth(u, v).disparity() >= 0) out(u, v) = truth(u, v);
    }
  }
  return out;
}

}  // namespace

TEST(CandidateSet, Examples) {
  DisparityMap m(5, 5);
  m(1, 2) = DisparityState::decisive(5);
  EXPECT_EQ(candidate_set({2, 2}, m, 1, 1, 64), (std::vector<int>{4, 5, 6}));
  m(3, 2) = DisparityState::decisive(6);
  EXPECT_EQ(candidate_set({2, 2}, m, 1, 1, 64), (std::vector<int>{4, 5, 6, 7}));
  EXPECT_TRUE(candidate_set({0, 0}, m, 1, 1, 64).empty());
  m(0, 1) = DisparityState::decisive(0);
  EXPECT_EQ(candidate_set({0, 0}, m, 1, 1, 64), (std::vector<int>{0, 1}));
  EXPECT_EQ(candidate_set({2, 2}, m, 2, 1, 6), (std::vector<int>{3, 4, 5, 6}));
}

TEST(EvaluateState, UniqueMinimumIsDecisive) {
  std::vector<float> curve(10, 0.9f);
  curve[4] = 0.9f;
  curve[5] = 0.2f;
  curve[6] = 0.8f;
  const CostVolume cl = curve_volume(20, 9, curve);
  const CostVolume cr = right_reference(cl);
  const std::vector<int> cands{4, 5, 6};
  EXPECT_EQ(evaluate_state({12, 0}, cands, cl, cr, 1), DisparityState::decisive(5));
}

TEST(EvaluateState, MonotoneCostsAreUnknown) {
  std::vector<float> curve{0.9f, 0.8f, 0.7f, 0.6f, 0.5f, 0.4f, 0.3f, 0.2f};
  const CostVolume cl = curve_volume(20, 7, curve);
  const std::vector<int> cands{3, 4, 5};
  EXPECT_TRUE(evaluate_state({12, 0}, cands, cl, right_reference(cl), 1).is_unknown());
}

TEST(EvaluateState, InconsistentRightViewIsUnknown) {
  std::vector<float> curve(10, 0.9f);
  curve[5] = 0.2f;
  CostVolume cl = curve_volume(20, 9, curve);
  CostVolume cr = right_reference(cl);
  // At q = 12 - 5 the right view prefers d = 8 among the candidates.
  cr.set(7, 0, 8, 0.05f);
  const std::vector<int> cands{4, 5, 6, 7, 8};
  EXPECT_TRUE(evaluate_state({12, 0}, cands, cl, cr, 1).is_unknown());
  EXPECT_EQ(evaluate_state({12, 0}, cands, cl, cr, 3), DisparityState::decisive(5));
}

TEST(AdversarialRule, Examples) {
  EXPECT_FALSE(adversarial_ok(0.10f, 0.25f));
  EXPECT_TRUE(adversarial_ok(0.30f, 0.25f));
  EXPECT_TRUE(adversarial_ok(0.25f, 0.25f));
}

TEST(Frontier, InitializeAndAdvance) {
  DisparityMap m(6, 4);
  m(2, 1) = DisparityState::decisive(3);
  m(5, 3) = DisparityState::invalid();
  CostVolume vol(6, 4, 4);
  vol.set(2, 1, 3, 0.125f);
  DiffusionFrontier f(6, 4);
  f.initialize(m, vol, 1);
  EXPECT_EQ(f.pending().size(), 8u);
  EXPECT_TRUE(f.has_history({2, 1}));
  EXPECT_EQ(f.history({2, 1}), 0.125f);
  EXPECT_FALSE(f.has_history({3, 1}));
  f.advance({{0, 0}, {1, 0}}, 1);
  EXPECT_EQ(f.iteration(), 1);
  const std::vector<Pixel> expected{{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}};
  EXPECT_EQ(f.pending(), expected);
}

TEST(Diffuse, SingleSeedFillsFrontoParallelPlane) {
  const DisparityMap truth(48, 32, 1, DisparityState::decisive(6));
  const CostVolume cl = planted_volume(truth, 12, 3);
  const CostVolume cr = right_reference(cl);
  DisparityMap seeds(48, 32);
  seeds(24, 16) = DisparityState::decisive(6);
  const DisparityMap out = diffuse(seeds, cl, cr, DiffusionParams{});
  for (int v = 0; v < 32; ++v) {
    for (int u = 6; u < 48; ++u) EXPECT_EQ(out(u, v), DisparityState::decisive(6)) << u << "," << v;
  }
}

TEST(Diffuse, EmptySeedsUnchanged) {
  std::mt19937_64 rng(1);
  const CostVolume cl = fixtures::random_volume(16, 16, 5, rng);
  DisparityMap seeds(16, 16);
  seeds(3, 3) = DisparityState::invalid();
  DiffusionStats stats;
  EXPECT_EQ(diffuse(seeds, cl, right_reference(cl), DiffusionParams{}, &stats), seeds);
  EXPECT_EQ(stats.iterations, 0);
}

TEST(Diffuse, TwoPlanesFollowPlantedMinima) {
  DisparityMap truth(64, 24);
  for (int v = 0; v < 24; ++v) {
    for (int u = 0; u < 64; ++u) truth(u, v) = DisparityState::decisive(u < 32 ? 5 : 20);
  }
  const CostVolume cl = planted_volume(truth, 24, 4);
  const CostVolume cr = right_reference(cl);
  DisparityMap seeds(64, 24);
  seeds(16, 12) = DisparityState::decisive(5);
  seeds(48, 12) = DisparityState::decisive(20);
  const DisparityMap out = diffuse(seeds, cl, cr, DiffusionParams{});
  std::size_t agree = 0, decisive = 0;
  for (int v = 0; v < 24; ++v) {
    for (int u = 5; u < 64; ++u) {
      if (!out(u, v).is_decisive()) continue;
      ++decisive;
      agree += out(u, v).disparity() == full_wta(cl, u, v) ? 1 : 0;
      if (u < 30 || u > 33) EXPECT_EQ(out(u, v), truth(u, v)) << u << "," << v;
    }
  }
  EXPECT_EQ(agree, decisive);
  EXPECT_GT(decisive, 0.95 * 59 * 24);
}

TEST(Diffuse, MatchesWtaOnPlantedVolumes) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const DisparityMap truth = planted_field(64, 64, 24, seed);
    const CostVolume cl = planted_volume(truth, 24, seed + 100);
    const CostVolume cr = right_reference(cl);
    const DisparityMap sparse = sparse_subset(truth, 0.05, seed + 200);
    const DisparityMap out = diffuse(sparse, cl, cr, DiffusionParams{});
    std::size_t agree = 0, decisive = 0;
    for (int v = 0; v < 64; ++v) {
      for (int u = 0; u < 64; ++u) {
        if (!out(u, v).is_decisive()) continue;
        ++decisive;
        agree += out(u, v).disparity() == full_wta(cl, u, v) ? 1 : 0;
      }
    }
    EXPECT_GE(static_cast<double>(agree) / decisive, 0.99);
    EXPECT_GE(density(out), density(sparse));
  }
}

TEST(Diffuse, DecisivePixelsAreStrictLocalMinima) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const CostVolume cl = fixtures::random_volume(40, 30, 10, rng);
    const CostVolume cr = right_reference(cl);
    DisparityMap seeds(40, 30);
    for (int i = 0; i < 30; ++i) {
      const int u = 10 + static_cast<int>(rng() % 30), v = static_cast<int>(rng() % 30);
      const int d = static_cast<int>(rng() % 11);
      const float c = cl.cost(u, v, d);
      if (c < cl.cost_or_sentinel(u, v, d - 1) && c < cl.cost_or_sentinel(u, v, d + 1)) {
        seeds(u, v) = DisparityState::decisive(d);
      }
    }
    DiffusionStats stats;
    const DisparityMap out = diffuse(seeds, cl, cr, DiffusionParams{}, &stats);
    EXPECT_GE(density(out), density(seeds));
    EXPECT_LE(stats.iterations, 40 * 30);
    for (int v = 0; v < 30; ++v) {
      for (int u = 0; u < 40; ++u) {
        if (!out(u, v).is_decisive()) continue;
        const int d = out(u, v).disparity();
        EXPECT_FALSE(cl.is_sentinel(u, v, d));
        EXPECT_LT(cl.cost(u, v, d), cl.cost_or_sentinel(u, v, d - 1));
        EXPECT_LT(cl.cost(u, v, d), cl.cost_or_sentinel(u, v, d + 1));
        EXPECT_GE(u - d, 0);
      }
    }
  }
}

TEST(Diffuse, TerminatesWithinWidthPlusHeightOnPlantedFields) {
  const DisparityMap truth = planted_field(48, 40, 20, 7);
  const CostVolume cl = planted_volume(truth, 20, 8);
  DisparityMap seeds(48, 40);
  seeds(30, 20) = truth(30, 20);
  DiffusionStats stats;
  diffuse(seeds, cl, right_reference(cl), DiffusionParams{}, &stats);
  EXPECT_LE(stats.iterations, 48 + 40);
  EXPECT_GT(stats.evaluations, 0u);
  EXPECT_GE(stats.candidates_evaluated, stats.evaluations);
}

TEST(Diffuse, SeedDefendedByHistory) {
  // Pixel 10 is seeded at its global minimum d=3; its neighbors at d=6 propose
  // a local minimum that costs more, which the adversarial rule rejects.
  std::vector<float> curve(10, 0.9f);
  curve[3] = 0.1f;
  curve[6] = 0.5f;
  const CostVolume cl = curve_volume(20, 9, curve);
  DisparityMap seeds(20, 1);
  seeds(10, 0) = DisparityState::decisive(3);
  seeds(9, 0) = DisparityState::decisive(6);
  seeds(11, 0) = DisparityState::decisive(6);
  const DisparityMap out = diffuse(seeds, cl, right_reference(cl), DiffusionParams{});
  EXPECT_EQ(out(10, 0), DisparityState::decisive(3));
}

TEST(Diffuse, DeterministicAcrossWorkerCounts) {
  const DisparityMap truth = planted_field(64, 48, 20, 3);
  const CostVolume cl = planted_volume(truth, 20, 4);
  const CostVolume cr = right_reference(cl);
  const DisparityMap sparse = sparse_subset(truth, 0.03, 5);
  set_worker_count(1);
  const DisparityMap a = diffuse(sparse, cl, cr, DiffusionParams{});
  set_worker_count(3);
  const DisparityMap b = diffuse(sparse, cl, cr, DiffusionParams{});
  set_worker_count(8);
  const DisparityMap c = diffuse(sparse, cl, cr, DiffusionParams{});
  set_worker_count(1);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Diffuse, DimensionMismatchThrows) {
  EXPECT_THROW(diffuse(DisparityMap(4, 4), CostVolume(4, 5, 2), CostVolume(4, 5, 2),
                       DiffusionParams{}),
               Error);
}
