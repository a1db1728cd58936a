#pragma once

#include <vector>

#include "d3stereo/core.hpp"

namespace d3stereo {

/// H x W x C feature map, channel-minor: index = (v * W + u) * C + c.
struct FeatureMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  const float* at(int u, int v) const {
    return data.data() + (static_cast<std::size_t>(v) * width + u) * channels;
  }
  float* at(int u, int v) {
    return data.data() + (static_cast<std::size_t>(v) * width + u) * channels;
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

enum class Side { Left, Right };

/// Level 0 of `levels` is the finest (pyramid level 1); each following level
/// halves the resolution (floor or ceiling).
struct FeaturePyramid {
  std::vector<FeatureMap> levels;
  Side side = Side::Left;

  int depth() const noexcept { return static_cast<int>(levels.size()); }
};

struct ImagePyramid {
  std::vector<GrayImage> levels;

  int depth() const noexcept { return static_cast<int>(levels.size()); }
  // 1-based pyramid level.
  const GrayImage& level(int i) const { return levels.at(static_cast<std::size_t>(i - 1)); }
};

// True when `next` is a valid half-resolution successor of `prev`.
bool is_halving(int prev, int next);

// 2x2 box average followed by decimation; output is ceil(H/2) x ceil(W/2), and
// edge cells average whichever source pixels exist.
GrayImage downsample(const GrayImage& img);

/// Image pyramid with `k` levels; throws TooSmallForDepth when the coarsest
/// level's shorter side would fall below `min_coarse_side`.
ImagePyramid build_image_pyramid(const GrayImage& img, int k, int min_coarse_side = 1);

/// cost(p,d) = (1 - NCC(block_L(p), block_R(p - (d,0)))) / 2 over the block
/// offsets valid in both images. Zero-variance blocks cost 1.0; p.u - d < 0 is
/// a sentinel. When `right_valid` is non-empty, a right pixel flagged 0 there
/// cannot be matched (sentinel).
CostVolume cost_volume_ncc(const GrayImage& left, const GrayImage& right, int d_max,
                           int block_radius, const std::vector<std::uint8_t>& right_valid = {});

/// cost(p,d) = (1 - cos(f_L(p), f_R(p - (d,0)))) / 2; zero-norm vectors cost 1.0.
CostVolume cost_volume_cosine(const FeatureMap& left, const FeatureMap& right, int d_max,
                              const std::vector<std::uint8_t>& right_valid = {});

/// Right-reference volume from a left-reference one: C_R(p,d) = C_L(p + (d,0), d),
/// sentinel where p.u + d leaves the image or the left cell is a sentinel.
CostVolume right_reference(const CostVolume& left_ref);

/// Left- and right-reference volumes for one pyramid level.
struct CostVolumePair {
  CostVolume left;
  CostVolume right;
};

/// d_max at 1-based level i: ceil(d_max_full / 2^(i-1)).
int level_d_max(int d_max_full, int level);

/// Cost pyramid from images (NCC mode) or feature pyramids (cosine mode).
std::vector<CostVolumePair> build_cost_pyramid(const ImagePyramid& left,
                                               const ImagePyramid& right,
                                               const PipelineConfig& config);
std::vector<CostVolumePair> build_cost_pyramid(const FeaturePyramid& left,
                                               const FeaturePyramid& right,
                                               const PipelineConfig& config);

}  // namespace d3stereo
