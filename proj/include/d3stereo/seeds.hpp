#pragma once

#include <span>

#include "d3stereo/core.hpp"

namespace d3stereo {

/// Peak-ratio-naive confidence of one cost curve.
struct PkrnScore {
  int best_d = 0;
  float best_cost = 0.0f;
  float second_cost = 0.0f;
  // second_cost / best_cost; +inf when only best_cost is zero, 1 when both are.
  float ratio = 1.0f;
};

/// Scores the non-sentinel entries of `costs` (all of them when `sentinels` is
/// empty). Ties go to the smaller disparity. Throws InsufficientCandidates
/// with fewer than two usable entries.
PkrnScore pkrn(std::span<const float> costs, std::span<const std::uint8_t> sentinels = {});

/// Left-right consistency at p: the projection p - (dL(p), 0) must be in
/// bounds, Decisive in dR, and within `tol` of dL(p).
bool lrdc_check(const DisparityMap& dL, const DisparityMap& dR, Pixel p, int tol);

/// Winner-take-all map holding only pixels whose PKRN ratio exceeds `gamma`.
DisparityMap confident_wta(const CostVolume& volume, double gamma);

/// Sparse coarsest-level seeds: confident in both views and left-right
/// consistent.
DisparityMap init_seeds(const CostVolume& cost_left, const CostVolume& cost_right, double gamma,
                        int lrdc_tol);

}  // namespace d3stereo
