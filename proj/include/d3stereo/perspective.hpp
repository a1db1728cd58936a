#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "d3stereo/core.hpp"
#include "d3stereo/pyramid.hpp"

namespace d3stereo {

/// Row-linear road disparity d(v) = alpha0 + alpha1 * v (full-resolution units).
struct RoadDisparityModel {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double inlier_fraction = 1.0;

  double at(double v) const { return alpha0 + alpha1 * v; }

  // Same model expressed in pixel units of 1-based pyramid level `level`,
  // where row v maps to full-resolution row v * 2^(level-1).
  RoadDisparityModel at_level(int level) const;
};

struct RoadSample {
  double v;  // full-resolution row
  double d;  // full-resolution disparity
};

inline constexpr std::size_t kMinRoadSamples = 50;
inline constexpr double kRoadOutlierResidual = 2.0;
// Below this inlier fraction the pipeline does not trust the road model.
inline constexpr double kMinRoadInlierFraction = 0.5;

/// Least-squares fit with one re-fit pass that drops residuals above 2 px.
/// Throws InsufficientSeeds (< 50 samples) or DegenerateFit (samples on <= 2
/// rows).
RoadDisparityModel fit_road_model(std::span<const RoadSample> samples);

/// Fits the Decisive pixels of a coarse dense map, scaling rows and
/// disparities by 2^(level-1). Requires density >= 0.2.
RoadDisparityModel fit_road_model(const DisparityMap& dense_k);

/// Per-row integer shifts round(model(v)) - offset for an image of `height` rows.
std::vector<int> row_shifts(const RoadDisparityModel& model, int height, int offset = 0);

struct PerspectiveResult {
  GrayImage image;
  std::vector<int> shift;            // applied shift per row
  std::vector<std::uint8_t> valid;   // 0 where a vacated column was zero-filled
};

/// Shifts every row v of the right image right by round(model(v)) - offset
/// columns; recomposed disparity = residual + shift[v].
PerspectiveResult apply_pt(const GrayImage& right, const RoadDisparityModel& model, int offset = 0);

/// Applies explicit row shifts to an image.
PerspectiveResult shift_rows(const GrayImage& image, std::span<const int> shift);

/// Applies explicit row shifts to a feature map (vacated cells zeroed).
FeatureMap shift_rows(const FeatureMap& features, std::span<const int> shift,
                      std::vector<std::uint8_t>* valid = nullptr);

/// residual + shift[v] for every Decisive pixel; results below zero become
/// Unknown.
DisparityMap recompose(const DisparityMap& residual, std::span<const int> shift);

/// Subtracts shift[v] from absolute disparities; Decisive values outside
/// [0, d_max] become Unknown.
DisparityMap to_residual(const DisparityMap& absolute, std::span<const int> shift, int d_max);

}  // namespace d3stereo
