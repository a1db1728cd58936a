#include "d3stereo/rbf.hpp"

#include <atomic>
#include <cmath>

#include "d3stereo/parallel.hpp"

namespace d3stereo {
namespace {

std::vector<WeightedPixel> window_weights(const GrayImage& guide, Pixel p, int radius,
                                          double sigma1, double sigma2) {
  std::vector<WeightedPixel> out;
  out.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)));
  const double inv_s1 = 1.0 / (sigma1 * sigma1);
  const double inv_s2 = 1.0 / (sigma2 * sigma2);
  const double center = guide(p.u, p.v);
  for (int dv = -radius; dv <= radius; ++dv) {
    const int v = p.v + dv;
    if (v < 0 || v >= guide.height()) continue;
    for (int du = -radius; du <= radius; ++du) {
      const int u = p.u + du;
      if (u < 0 || u >= guide.width()) continue;
      const double di = center - static_cast<double>(guide(u, v));
      const double spatial = static_cast<double>(du * du + dv * dv);
      out.push_back({{u, v}, std::exp(-spatial * inv_s1 - di * di * inv_s2)});
    }
  }
  return out;
}

void check_guide(const CostVolume& volume, const GrayImage& guide) {
  if (guide.width() != volume.width() || guide.height() != volume.height()) {
    throw Error(ErrorCode::DimensionMismatch, "guide image does not match cost volume");
  }
}

// One bilateral pass from `in` into `out` (same shape, sentinel flags copied).
void bilateral_pass(const CostVolume& in, CostVolume& out, const GrayImage& guide, int radius,
                    double sigma1, double sigma2, OpCounter* counter) {
  const int W = in.width();
  const int H = in.height();
  const int D = in.disparities();
  const auto& src = in.raw_costs();
  const auto& flags = in.raw_sentinels();
  auto& dst = out.raw_costs();
  std::atomic<std::uint64_t> total{0};

  parallel_rows(0, H, [&](int v0, int v1) {
    std::vector<double> num(static_cast<std::size_t>(D));
    std::vector<double> den(static_cast<std::size_t>(D));
    std::uint64_t ops = 0;
    for (int v = v0; v < v1; ++v) {
      for (int u = 0; u < W; ++u) {
        const auto weights = window_weights(guide, {u, v}, radius, sigma1, sigma2);
        std::fill(num.begin(), num.end(), 0.0);
        std::fill(den.begin(), den.end(), 0.0);
        for (const auto& [q, w] : weights) {
          const std::size_t base = in.index(q.u, q.v, 0);
          for (int d = 0; d < D; ++d) {
            if (flags[base + d]) continue;
            num[d] += w * src[base + d];
            den[d] += w;
            ++ops;
          }
        }
        const std::size_t self = in.index(u, v, 0);
        for (int d = 0; d < D; ++d) {
          // The center carries weight 1, so den > 0 for every non-sentinel cell.
          dst[self + d] = flags[self + d] ? kSentinelCost : static_cast<float>(num[d] / den[d]);
        }
      }
    }
    total.fetch_add(ops, std::memory_order_relaxed);
  });
  if (counter) counter->multiply_adds += total.load();
}

}  // namespace

std::vector<WeightedPixel> rbf_weights(const GrayImage& guide, Pixel p,
                                       const RbfKernelParams& params) {
  return window_weights(guide, p, params.kappa_a, params.sigma1, params.sigma2);
}

CostVolume rbf_aggregate(const CostVolume& volume, const GrayImage& guide,
                         const RbfKernelParams& params, OpCounter* counter) {
  check_guide(volume, guide);
  if (params.t_max < 1 || params.kappa_a < 1 || !(params.sigma1 > 0) || !(params.sigma2 > 0)) {
    throw Error(ErrorCode::InvalidConfig, "RBF parameters must be positive");
  }
  CostVolume current = volume;
  CostVolume next = volume;
  for (int t = 0; t < params.t_max; ++t) {
    bilateral_pass(current, next, guide, params.kappa_a, params.sigma1, params.sigma2, counter);
    std::swap(current, next);
  }
  return current;
}

CostVolume bf_aggregate(const CostVolume& volume, const GrayImage& guide, int radius,
                        double sigma1, double sigma2, OpCounter* counter) {
  check_guide(volume, guide);
  if (radius < 1 || !(sigma1 > 0) || !(sigma2 > 0)) {
    throw Error(ErrorCode::InvalidConfig, "BF parameters must be positive");
  }
  CostVolume out = volume;
  bilateral_pass(volume, out, guide, radius, sigma1, sigma2, counter);
  return out;
}

double op_count_ratio(int t_max) {
  if (t_max < 1) throw Error(ErrorCode::InvalidConfig, "t_max must be >= 1");
  const double t = t_max;
  return (4.0 * t + 1.0 / t + 4.0) / 9.0;
}

}  // namespace d3stereo
