#include "d3stereo/seeds.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

#include "d3stereo/parallel.hpp"

namespace d3stereo {

PkrnScore pkrn(std::span<const float> costs, std::span<const std::uint8_t> sentinels) {
  const bool masked = !sentinels.empty();
  if (masked && sentinels.size() != costs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "sentinel mask length differs from cost row");
  }
  int best = -1;
  int second = -1;
  for (int d = 0; d < static_cast<int>(costs.size()); ++d) {
    if (masked && sentinels[d]) continue;
    const float c = costs[d];
    if (best < 0 || c < costs[best]) {
      second = best;
      best = d;
    } else if (second < 0 || c < costs[second]) {
      second = d;
    }
  }
  if (second < 0) {
    throw Error(ErrorCode::InsufficientCandidates, "PKRN needs at least two valid costs");
  }
  PkrnScore s;
  s.best_d = best;
  s.best_cost = costs[best];
  s.second_cost = costs[second];
  if (s.best_cost == 0.0f) {
    s.ratio = s.second_cost == 0.0f ? 1.0f : std::numeric_limits<float>::infinity();
  } else {
    s.ratio = static_cast<float>(static_cast<double>(s.second_cost) / s.best_cost);
  }
  return s;
}

bool lrdc_check(const DisparityMap& dL, const DisparityMap& dR, Pixel p, int tol) {
  const DisparityState s = dL(p);
  if (!s.is_decisive()) return false;
  const Pixel q{p.u - s.disparity(), p.v};
  if (!dR.contains(q)) return false;
  const DisparityState r = dR(q);
  return r.is_decisive() && std::abs(s.disparity() - r.disparity()) <= tol;
}

DisparityMap confident_wta(const CostVolume& volume, double gamma) {
  DisparityMap out(volume.width(), volume.height(), volume.level());
  parallel_rows(0, volume.height(), [&](int v0, int v1) {
    for (int v = v0; v < v1; ++v) {
      for (int u = 0; u < volume.width(); ++u) {
        const auto costs = volume.costs(u, v);
        const auto flags = volume.sentinels(u, v);
        int usable = 0;
        for (const auto f : flags) usable += f ? 0 : 1;
        if (usable < 2) continue;
        const PkrnScore s = pkrn(costs, flags);
        if (static_cast<double>(s.ratio) > gamma) out(u, v) = DisparityState::decisive(s.best_d);
      }
    }
  });
  return out;
}

DisparityMap init_seeds(const CostVolume& cost_left, const CostVolume& cost_right, double gamma,
                        int lrdc_tol) {
  if (cost_left.width() != cost_right.width() || cost_left.height() != cost_right.height()) {
    throw Error(ErrorCode::DimensionMismatch, "left/right cost volumes differ in size");
  }
  const DisparityMap left = confident_wta(cost_left, gamma);
  const DisparityMap right = confident_wta(cost_right, gamma);
  DisparityMap seeds(left.width(), left.height(), cost_left.level());
  for (int v = 0; v < left.height(); ++v) {
    for (int u = 0; u < left.width(); ++u) {
      if (lrdc_check(left, right, {u, v}, lrdc_tol)) seeds(u, v) = left(u, v);
    }
  }
  return seeds;
}

}  // namespace d3stereo
