#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <tuple>

#include "d3stereo/inheritance.hpp"
#include "d3stereo/pyramid.hpp"
#include "inheritance_oracle.hpp"
#include "test_util.hpp"

using namespace d3stereo;

namespace {

using namespace oracle;

CostVolume mirror_columns(const CostVolume& vol) {
  CostVolume out(vol.width(), vol.height(), vol.d_max(), vol.level());
  for (int v = 0; v < vol.height(); ++v) {
    for (int u = 0; u < vol.width(); ++u) {
      for (int d = 0; d <= vol.d_max(); ++d) {
        const int src = vol.width() - 1 - u;
        if (vol.is_sentinel(src, v, d)) {
          out.set_sentinel(u, v, d);
        } else {
          out.set(u, v, d, vol.cost(src, v, d));
        }
      }
    }
  }
  return out;
}

DisparityMap mirror_columns(const DisparityMap& m) {
  DisparityMap out(m.width(), m.height(), m.level());
  for (int v = 0; v < m.height(); ++v) {
    for (int u = 0; u < m.width(); ++u) out(u, v) = m(m.width() - 1 - u, v);
  }
  return out;
}

}  // namespace

TEST(ExpandMatch, Arithmetic) {
  const PatchPair p = expand_match({3, 4}, 2, 32, 32);
  EXPECT_EQ(p.left_top, (PixelPair{Pixel{6, 8}, Pixel{7, 8}}));
  EXPECT_EQ(p.left_bottom, (PixelPair{Pixel{6, 9}, Pixel{7, 9}}));
  EXPECT_EQ(p.right_top, (PixelPair{Pixel{2, 8}, Pixel{3, 8}}));
  EXPECT_EQ(p.right_bottom, (PixelPair{Pixel{2, 9}, Pixel{3, 9}}));
  EXPECT_EQ(p.base_top, 4);
  EXPECT_EQ(p.base_bottom, 4);
}

TEST(ExpandMatch, RightPatchIsLeftMinusTwiceDisparity) {
  const PatchPair p = expand_match({10, 4}, 3, 32, 32);
  EXPECT_EQ(p.right_top, (PixelPair{Pixel{14, 8}, Pixel{15, 8}}));
  EXPECT_EQ(p.right_bottom, (PixelPair{Pixel{14, 9}, Pixel{15, 9}}));
  EXPECT_EQ(p.left_top_flank, (PixelPair{Pixel{19, 8}, Pixel{22, 8}}));
  EXPECT_EQ(p.right_bottom_flank, (PixelPair{Pixel{13, 9}, Pixel{16, 9}}));
}

TEST(ExpandMatch, OutOfBounds) {
  try {
    expand_match({0, 2}, 1, 16, 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PatchOutOfBounds);
  }
  EXPECT_FALSE(try_expand_match({0, 2}, 1, 16, 16).has_value());
}

TEST(ExpandMatch, ZeroDisparityCongruent) {
  const PatchPair p = expand_match({2, 2}, 0, 16, 16);
  EXPECT_EQ(p.left_top, p.right_top);
  EXPECT_EQ(p.left_bottom, p.right_bottom);
}

TEST(ExpandMatch, RowShiftMovesRightPatch) {
  std::vector<int> shift(16, 0);
  shift[4] = 2;
  shift[5] = -1;
  const PatchPair p = expand_match({4, 2}, 3, 16, 16, shift);
  EXPECT_EQ(p.base_top, 4);
  EXPECT_EQ(p.base_bottom, 7);
  EXPECT_EQ(p.right_top[0].u, 8 - 4);
  EXPECT_EQ(p.right_bottom[0].u, 8 - 7);
}

TEST(Theta, Examples) {
  CostVolume vol(10, 1, 5);
  for (int u = 0; u < 10; ++u) {
    for (int d = 0; d <= 5; ++d) {
      if (u - d >= 0) vol.set(u, 0, d, 0.8f);
    }
  }
  vol.set(6, 0, 3, 0.1f);
  vol.set(7, 0, 2, 0.2f);
  const std::vector<Pixel> l{{6, 0}, {7, 0}}, r{{3, 0}, {5, 0}};
  EXPECT_EQ(theta(l, r, vol), (std::vector<float>{0.1f, 0.2f}));

  const std::vector<Pixel> none{{9, 0}};
  const std::vector<Pixel> far{{0, 0}, {1, 0}};
  EXPECT_EQ(theta(far, none, vol), (std::vector<float>{1.0f, 1.0f}));

  const std::vector<Pixel> one{{6, 0}}, other{{3, 0}};
  EXPECT_EQ(theta(one, other, vol), (std::vector<float>{0.1f}));
}

TEST(PatchReliable, Examples) {
  const auto uniform = [](float c) {
    CostVolume vol(32, 16, 16);
    for (int v = 0; v < 16; ++v) {
      for (int u = 0; u < 32; ++u) {
        for (int d = 0; d <= 16; ++d) {
          if (u - d >= 0) vol.set(u, v, d, c);
        }
      }
    }
    return vol;
  };
  const PatchPair p = expand_match({8, 4}, 3, 32, 16);
  // Column 16 pairs at 5, 6 (flanks 4, 7); column 17 at 6, 7 (flanks 5, 8).
  CostVolume good = uniform(0.9f);
  for (const int v : {8, 9}) {
    good.set(16, v, 5, 0.1f);
    good.set(16, v, 6, 0.1f);
    good.set(17, v, 6, 0.1f);
    good.set(17, v, 7, 0.1f);
  }
  EXPECT_TRUE(patch_reliable(p, good, right_reference(good)));

  const CostVolume flat = uniform(0.5f);
  EXPECT_FALSE(patch_reliable(p, flat, right_reference(flat)));

  CostVolume inverted = uniform(0.1f);
  for (const Pixel pl : {p.left_top[0], p.left_top[1], p.left_bottom[0], p.left_bottom[1]}) {
    for (int d = 5; d <= 7; ++d) inverted.set(pl.u, pl.v, d, 0.5f);
  }
  EXPECT_FALSE(patch_reliable(p, inverted, right_reference(inverted)));
}

TEST(LocalMinimum, Examples) {
  CostVolume vol(32, 16, 16);
  for (int v = 0; v < 16; ++v) {
    for (int u = 0; u < 32; ++u) {
      for (int d = 0; d <= 16; ++d) {
        if (u - d >= 0) vol.set(u, v, d, 0.9f);
      }
    }
  }
  const PatchPair p = expand_match({8, 4}, 3, 32, 16);
  const Pixel pl = p.left_top[0];
  vol.set(pl.u, pl.v, 6, 0.1f);
  EXPECT_TRUE(local_minimum_ok(pl, 6, p, vol, right_reference(vol)));

  CostVolume plateau = vol;
  plateau.set(pl.u, pl.v, 7, 0.1f);
  EXPECT_FALSE(local_minimum_ok(pl, 6, p, plateau, right_reference(plateau)));

  CostVolume flank = vol;
  flank.set(pl.u, pl.v, 4, 0.05f);  // pairs with the right flank
  EXPECT_FALSE(local_minimum_ok(pl, 6, p, flank, right_reference(flank)));
}

TEST(Inheritance, BruteForceAgreement) {
  std::mt19937_64 rng(2024);
  int reliable = 0, matched = 0, evaluated = 0;
  for (int trial = 0; evaluated < 1000; ++trial) {
    const auto c = random_patch_case(rng, trial);
    if (!c) continue;
    ++evaluated;
    OracleResult reference;
    ASSERT_TRUE(agrees(*c, &reference)) << "trial " << trial;
    reliable += reference.reliable ? 1 : 0;
    matched += reference.matches.empty() ? 0 : 1;
  }
  EXPECT_GT(reliable, 20);
  EXPECT_GT(matched, 10);
}

TEST(Inheritance, PlantedChildMinima) {
  const int pw = 16, ph = 8, w = 32, h = 16;
  const DisparityMap parent(pw, ph, 2, DisparityState::decisive(5));
  const DisparityMap truth(w, h, 1, DisparityState::decisive(10));
  const CostVolume cl = planted_volume(truth, 16, 3);
  const CostVolume cr = right_reference(cl);
  const InheritanceResult r = inherit(parent, cl, cr);
  std::size_t seeded = 0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const DisparityState s = r.left(u, v);
      if (!s.is_decisive()) continue;
      ++seeded;
      EXPECT_EQ(s.disparity(), 10);
      const PatchPair p = expand_match({u / 2, v / 2}, 5, w, h);
      EXPECT_TRUE(local_minimum_ok({u, v}, 10, p, cl, cr));
    }
  }
  EXPECT_GT(seeded, static_cast<std::size_t>((w - 12) * h * 9 / 10));
}

TEST(Inheritance, UnknownParentGivesUnknownChildren) {
  std::mt19937_64 rng(4);
  const CostVolume cl = fixtures::random_volume(16, 8, 6, rng);
  const InheritanceResult r = inherit(DisparityMap(8, 4, 2), cl, right_reference(cl));
  EXPECT_EQ(density(r.left), 0.0);
  EXPECT_EQ(density(r.right), 0.0);
}

TEST(Inheritance, ChildDisparitiesStayNearTwiceParent) {
  std::mt19937_64 rng(5);
  const CostVolume cl = quantized_volume(40, 20, 16, rng);
  const CostVolume cr = right_reference(cl);
  DisparityMap parent(20, 10, 2);
  for (auto& s : parent.states()) s = DisparityState::decisive(static_cast<int>(rng() % 8));
  const InheritanceResult r = inherit(parent, cl, cr);
  for (int v = 0; v < 20; ++v) {
    for (int u = 0; u < 40; ++u) {
      if (!r.left(u, v).is_decisive()) continue;
      const int pd = parent(u / 2, v / 2).disparity();
      EXPECT_LE(std::abs(r.left(u, v).disparity() - 2 * pd), 1);
      const PatchPair p = expand_match({u / 2, v / 2}, pd, 40, 20);
      EXPECT_TRUE(local_minimum_ok({u, v}, r.left(u, v).disparity(), p, cl, cr));
    }
  }
}

TEST(AssignMinCost, LowerCostWinsTiesToSmallerDisparity) {
  DisparityMap m(2, 1);
  std::vector<float> costs(2, std::numeric_limits<float>::infinity());
  assign_min_cost(m, costs, {0, 0}, 7, 0.4f);
  assign_min_cost(m, costs, {0, 0}, 5, 0.6f);
  EXPECT_EQ(m(0, 0), DisparityState::decisive(7));
  assign_min_cost(m, costs, {0, 0}, 9, 0.2f);
  EXPECT_EQ(m(0, 0), DisparityState::decisive(9));
  assign_min_cost(m, costs, {0, 0}, 8, 0.2f);
  EXPECT_EQ(m(0, 0), DisparityState::decisive(8));
  assign_min_cost(m, costs, {0, 0}, 10, 0.2f);
  EXPECT_EQ(m(0, 0), DisparityState::decisive(8));
}

TEST(Inheritance, ConflictingParentsKeepLowerCost) {
  // Parents (7,0) d=2 and (5,0) d=0 both project onto right columns 10, 11.
  CostVolume cl(16, 2, 4);
  for (int v = 0; v < 2; ++v) {
    for (int u = 0; u < 16; ++u) {
      for (int d = 0; d <= 4; ++d) {
        if (u - d >= 0) cl.set(u, v, d, 0.9f);
      }
    }
    cl.set(14, v, 4, 0.3f);
    cl.set(15, v, 4, 0.3f);
    cl.set(10, v, 0, 0.1f);
    cl.set(11, v, 0, 0.1f);
  }
  const CostVolume cr = right_reference(cl);
  DisparityMap parent(8, 1, 2);
  parent(7, 0) = DisparityState::decisive(2);
  parent(5, 0) = DisparityState::decisive(0);
  const InheritanceResult r = inherit(parent, cl, cr);
  for (int v = 0; v < 2; ++v) {
    EXPECT_EQ(r.left(14, v), DisparityState::decisive(4));
    EXPECT_EQ(r.left(15, v), DisparityState::decisive(4));
    EXPECT_EQ(r.left(10, v), DisparityState::decisive(0));
    EXPECT_EQ(r.right(10, v), DisparityState::decisive(0));
    EXPECT_EQ(r.right(11, v), DisparityState::decisive(0));
  }
}

TEST(Inheritance, MirrorSymmetry) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int pw = 12, ph = 6, w = 2 * pw, h = 2 * ph, d_max = 12;
    const CostVolume cl = quantized_volume(w, h, d_max, rng);
    const CostVolume cr = right_reference(cl);
    // Per-row constant parent disparities with holes, and the matching right view.
    DisparityMap parent_left(pw, ph, 2), parent_right(pw, ph, 2);
    for (int v = 0; v < ph; ++v) {
      const int d = static_cast<int>(rng() % 5);
      for (int u = 0; u < pw; ++u) {
        if (rng() % 4 == 0) continue;
        parent_left(u, v) = DisparityState::decisive(d);
        if (u - d >= 0) parent_right(u - d, v) = DisparityState::decisive(d);
      }
    }
    const InheritanceResult a = inherit(parent_left, cl, cr);
    const InheritanceResult b =
        inherit(mirror_columns(parent_right), mirror_columns(cr), mirror_columns(cl));
    EXPECT_EQ(b.left, mirror_columns(a.right));
    EXPECT_EQ(b.right, mirror_columns(a.left));
  }
}
