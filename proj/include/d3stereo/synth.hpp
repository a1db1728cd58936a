#pragma once

#include <cstdint>

#include "d3stereo/core.hpp"
#include "d3stereo/perspective.hpp"

namespace d3stereo {

/// Rectified stereo pair with exact left-view ground truth (NaN where the
/// left pixel has no visible correspondence).
struct SyntheticScene {
  GrayImage left;
  GrayImage right;
  GrayImage ground_truth;
};

/// Smooth multi-octave value noise in [0, 255], continuous in both axes so it
/// can be sampled at fractional columns.
class Texture {
 public:
  explicit Texture(std::uint64_t seed, int min_period = 4, int octaves = 5);

  double operator()(double x, double y) const;

 private:
  double lattice(int octave, int ix, int iy) const;

  std::uint64_t seed_;
  int min_period_;
  int octaves_;
};

/// Planar road: disparity follows `model` on every row. Intensities are
/// rounded to integers so the pair survives 8-bit storage unchanged.
SyntheticScene road_scene(int width, int height, const RoadDisparityModel& model,
                          std::uint64_t seed = 1);

/// Fronto-parallel background at `background_d` with a full-height foreground
/// band over columns [band_begin, band_end) at `foreground_d`. Occluded
/// background pixels carry NaN ground truth.
SyntheticScene two_plane_scene(int width, int height, int background_d, int foreground_d,
                               int band_begin, int band_end, std::uint64_t seed = 2);

/// Random left-reference cost volume whose unique, deep minimum at every pixel
/// lies at `truth` (Decisive pixels only; other pixels get no minimum).
CostVolume planted_volume(const DisparityMap& truth, int d_max, std::uint64_t seed);

/// Smooth random integer disparity field with unit-bounded neighbor steps,
/// clamped to [0, min(d_max, u)] so every pixel's match lies inside the image.
DisparityMap planted_field(int width, int height, int d_max, std::uint64_t seed);

}  // namespace d3stereo
