#pragma once

#include <cstdint>
#include <vector>

#include "d3stereo/core.hpp"

namespace d3stereo {

struct RbfKernelParams {
  double sigma1 = 2.0;  // spatial
  double sigma2 = 10.0; // intensity
  int kappa_a = 1;      // kernel radius
  int t_max = 4;        // iterations

  static RbfKernelParams from(const PipelineConfig& config) {
    return {config.sigma1, config.sigma2, config.kappa_a, config.t_max};
  }
};

struct WeightedPixel {
  Pixel q;
  double weight;
};

// Counts the multiply-adds performed by the aggregation kernels.
struct OpCounter {
  std::uint64_t multiply_adds = 0;
};

/// Bilateral weights K(q) = exp(-|p-q|^2/sigma1^2 - (I(p)-I(q))^2/sigma2^2)
/// for every in-bounds q within Chebyshev radius kappa_a of p, p included
/// (with weight 1). Row-major order.
std::vector<WeightedPixel> rbf_weights(const GrayImage& guide, Pixel p,
                                       const RbfKernelParams& params);

/// Recursive bilateral filtering: t_max passes of the kappa_a-radius kernel,
/// each pass reading only the previous pass's output. Sentinel cells are left
/// untouched and never contribute to a neighbor's average.
CostVolume rbf_aggregate(const CostVolume& volume, const GrayImage& guide,
                         const RbfKernelParams& params, OpCounter* counter = nullptr);

/// One bilateral pass with a (2 radius + 1)^2 window.
CostVolume bf_aggregate(const CostVolume& volume, const GrayImage& guide, int radius,
                        double sigma1, double sigma2, OpCounter* counter = nullptr);

/// Theoretical ratio of single-pass BF work (radius t_max) to RBF work
/// (t_max passes of a 3x3 kernel): (4 t + 1/t + 4) / 9.
double op_count_ratio(int t_max);

}  // namespace d3stereo
