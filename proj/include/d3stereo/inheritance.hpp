#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "d3stereo/core.hpp"

namespace d3stereo {

using PixelPair = std::array<Pixel, 2>;

/// A parent match expanded to the next-finer level: the 2x2 children of the
/// left parent, the matching 2x2 block in the right view (one co-row pair per
/// patch row), and the pixels flanking each row pair on the left and right.
struct PatchPair {
  PixelPair left_top, left_bottom;
  PixelPair right_top, right_bottom;
  PixelPair left_top_flank, left_bottom_flank;
  PixelPair right_top_flank, right_bottom_flank;
  // Disparity of the aligned pairing per row (2 * parent disparity minus the
  // row's perspective shift).
  int base_top = 0;
  int base_bottom = 0;
};

/// Expands a Decisive parent at level i+1 into its child patch pair. Optional
/// per-row shifts (indexed by child row) move the right patch for
/// perspective-transformed right images. Returns nullopt when any left or right
/// patch pixel falls outside the child image.
std::optional<PatchPair> try_expand_match(Pixel parent, int parent_d, int child_width,
                                          int child_height,
                                          std::span<const int> row_shift = {});

/// Throwing variant of try_expand_match (PatchOutOfBounds).
PatchPair expand_match(Pixel parent, int parent_d, int child_width, int child_height,
                       std::span<const int> row_shift = {});

enum class Reference { Left, Right };

/// For each pixel of `reference_set`, the lowest cost over its co-row pairings
/// with `other_set`. The pairing disparity is ref.u - other.u for the left
/// reference and other.u - ref.u for the right. Negative or > d_max
/// disparities and out-of-image pixels are skipped; a pixel with no usable
/// pairing contributes 1.0.
std::vector<float> theta(std::span<const Pixel> reference_set, std::span<const Pixel> other_set,
                         const CostVolume& volume, Reference reference = Reference::Left);

/// Patch reliability: the mean in-patch cost must be strictly below the
/// minimum flank cost, in both matching directions.
bool patch_reliable(const PatchPair& patch, const CostVolume& cost_left,
                    const CostVolume& cost_right, PrcMean mean_mode = PrcMean::Union);

/// Strict local minimum of the pairing (left_pixel, left_pixel - (d,0)) over
/// d-1, d+1 and the patch's minimum flank cost, in both directions.
bool local_minimum_ok(Pixel left_pixel, int d, const PatchPair& patch,
                      const CostVolume& cost_left, const CostVolume& cost_right);

struct InheritedMatch {
  Pixel left;
  Pixel right;
  int d;
  float cost;
};

/// All accepted pairings of one patch (empty when the patch is unreliable).
std::vector<InheritedMatch> evaluate_patch(const PatchPair& patch, const CostVolume& cost_left,
                                           const CostVolume& cost_right,
                                           PrcMean mean_mode = PrcMean::Union);

struct InheritanceResult {
  DisparityMap left;   // sparse seeds for the left view
  DisparityMap right;  // the same matches indexed by their right pixel
};

/// Writes `d` at `p` unless an existing assignment has a lower cost (ties keep
/// the smaller disparity). `costs` runs parallel to the map's states.
void assign_min_cost(DisparityMap& map, std::vector<float>& costs, Pixel p, int d, float cost);

/// Inter-scale inheritance from a parent map (absolute disparities at level
/// i+1) into sparse seeds at level i. With `row_shift`, child disparities are
/// residuals relative to the per-row shift.
InheritanceResult inherit(const DisparityMap& parent, const CostVolume& cost_left,
                          const CostVolume& cost_right, PrcMean mean_mode = PrcMean::Union,
                          std::span<const int> row_shift = {});

}  // namespace d3stereo
