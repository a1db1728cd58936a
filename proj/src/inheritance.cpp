#include "d3stereo/inheritance.hpp"

#include <algorithm>
#include <limits>

#include "d3stereo/parallel.hpp"
#include "d3stereo/pyramid.hpp"

namespace d3stereo {
namespace {

int pairing_disparity(Pixel ref, Pixel other, Reference reference) {
  return reference == Reference::Left ? ref.u - other.u : other.u - ref.u;
}

// Cost of one pairing, or nullopt when the pairing is unusable.
std::optional<float> pairing_cost(Pixel ref, Pixel other, const CostVolume& vol,
                                  Reference reference) {
  if (ref.v != other.v || !vol.contains(ref.u, ref.v) || !vol.contains(other.u, other.v)) {
    return std::nullopt;
  }
  const int d = pairing_disparity(ref, other, reference);
  if (d < 0 || d > vol.d_max()) return std::nullopt;
  return vol.cost(ref.u, ref.v, d);
}

std::array<float, 2> theta2(const PixelPair& ref, const PixelPair& other, const CostVolume& vol,
                            Reference reference) {
  std::array<float, 2> out{kSentinelCost, kSentinelCost};
  for (std::size_t i = 0; i < 2; ++i) {
    bool any = false;
    float best = kSentinelCost;
    for (const Pixel o : other) {
      if (const auto c = pairing_cost(ref[i], o, vol, reference)) {
        best = any ? std::min(best, *c) : *c;
        any = true;
      }
    }
    out[i] = best;
  }
  return out;
}

double patch_mean(const std::array<float, 2>& top, const std::array<float, 2>& bottom,
                  PrcMean mode) {
  if (mode == PrcMean::PerSet) {
    const double mt = (static_cast<double>(top[0]) + top[1]) / 2.0;
    const double mb = (static_cast<double>(bottom[0]) + bottom[1]) / 2.0;
    return (mt + mb) / 2.0;
  }
  return (static_cast<double>(top[0]) + top[1] + bottom[0] + bottom[1]) / 4.0;
}

float min4(const std::array<float, 2>& a, const std::array<float, 2>& b) {
  return std::min({a[0], a[1], b[0], b[1]});
}

struct DirectionTerms {
  bool reliable = false;
  float flank_min = kSentinelCost;
};

DirectionTerms left_terms(const PatchPair& p, const CostVolume& cost_left, PrcMean mode) {
  const auto top = theta2(p.left_top, p.right_top, cost_left, Reference::Left);
  const auto bottom = theta2(p.left_bottom, p.right_bottom, cost_left, Reference::Left);
  const auto flank_top = theta2(p.left_top, p.right_top_flank, cost_left, Reference::Left);
  const auto flank_bottom = theta2(p.left_bottom, p.right_bottom_flank, cost_left, Reference::Left);
  const float flank = min4(flank_top, flank_bottom);
  return {patch_mean(top, bottom, mode) < static_cast<double>(flank), flank};
}

DirectionTerms right_terms(const PatchPair& p, const CostVolume& cost_right, PrcMean mode) {
  const auto top = theta2(p.right_top, p.left_top, cost_right, Reference::Right);
  const auto bottom = theta2(p.right_bottom, p.left_bottom, cost_right, Reference::Right);
  const auto flank_top = theta2(p.right_top, p.left_top_flank, cost_right, Reference::Right);
  const auto flank_bottom =
      theta2(p.right_bottom, p.left_bottom_flank, cost_right, Reference::Right);
  const float flank = min4(flank_top, flank_bottom);
  return {patch_mean(top, bottom, mode) < static_cast<double>(flank), flank};
}

bool strict_local_min(const CostVolume& vol, Pixel p, int d, float flank_min) {
  if (!vol.contains(p.u, p.v) || d < 0 || d > vol.d_max() || vol.is_sentinel(p.u, p.v, d)) {
    return false;
  }
  const float c = vol.cost(p.u, p.v, d);
  return c < vol.cost_or_sentinel(p.u, p.v, d - 1) && c < vol.cost_or_sentinel(p.u, p.v, d + 1) &&
         c < flank_min;
}

PixelPair flanks(const PixelPair& row) {
  return {Pixel{row[0].u - 1, row[0].v}, Pixel{row[1].u + 1, row[1].v}};
}

std::vector<float> concat(std::vector<float> a, const std::vector<float>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

std::optional<PatchPair> try_expand_match(Pixel parent, int parent_d, int child_width,
                                          int child_height, std::span<const int> row_shift) {
  const int u0 = 2 * parent.u;
  const int top = 2 * parent.v;
  const int bottom = top + 1;
  if (u0 < 0 || u0 + 1 >= child_width || top < 0 || bottom >= child_height) return std::nullopt;
  if (!row_shift.empty() && static_cast<int>(row_shift.size()) < child_height) {
    throw Error(ErrorCode::DimensionMismatch, "row shift table shorter than child height");
  }
  auto shift = [&](int row) { return row_shift.empty() ? 0 : row_shift[static_cast<std::size_t>(row)]; };

  PatchPair p;
  p.base_top = 2 * parent_d - shift(top);
  p.base_bottom = 2 * parent_d - shift(bottom);
  p.left_top = {Pixel{u0, top}, Pixel{u0 + 1, top}};
  p.left_bottom = {Pixel{u0, bottom}, Pixel{u0 + 1, bottom}};
  p.right_top = {Pixel{u0 - p.base_top, top}, Pixel{u0 + 1 - p.base_top, top}};
  p.right_bottom = {Pixel{u0 - p.base_bottom, bottom}, Pixel{u0 + 1 - p.base_bottom, bottom}};
  for (const auto& row : {p.right_top, p.right_bottom}) {
    for (const Pixel q : row) {
      if (q.u < 0 || q.u >= child_width) return std::nullopt;
    }
  }
  p.left_top_flank = flanks(p.left_top);
  p.left_bottom_flank = flanks(p.left_bottom);
  p.right_top_flank = flanks(p.right_top);
  p.right_bottom_flank = flanks(p.right_bottom);
  return p;
}

PatchPair expand_match(Pixel parent, int parent_d, int child_width, int child_height,
                       std::span<const int> row_shift) {
  auto p = try_expand_match(parent, parent_d, child_width, child_height, row_shift);
  if (!p) {
    throw Error(ErrorCode::PatchOutOfBounds,
                "patch of parent (" + std::to_string(parent.u) + "," + std::to_string(parent.v) +
                    ") d=" + std::to_string(parent_d) + " leaves the image");
  }
  return *p;
}

std::vector<float> theta(std::span<const Pixel> reference_set, std::span<const Pixel> other_set,
                         const CostVolume& volume, Reference reference) {
  std::vector<float> out;
  out.reserve(reference_set.size());
  for (const Pixel r : reference_set) {
    std::optional<float> best;
    for (const Pixel o : other_set) {
      if (const auto c = pairing_cost(r, o, volume, reference)) {
        best = best ? std::min(*best, *c) : *c;
      }
    }
    out.push_back(best.value_or(kSentinelCost));
  }
  return out;
}

bool patch_reliable(const PatchPair& patch, const CostVolume& cost_left,
                    const CostVolume& cost_right, PrcMean mean_mode) {
  auto direction = [&](const PixelPair& ref_top, const PixelPair& ref_bottom,
                       const PixelPair& other_top, const PixelPair& other_bottom,
                       const PixelPair& flank_top, const PixelPair& flank_bottom,
                       const CostVolume& vol, Reference ref) {
    const auto in_top = theta(ref_top, other_top, vol, ref);
    const auto in_bottom = theta(ref_bottom, other_bottom, vol, ref);
    const auto out = concat(theta(ref_top, flank_top, vol, ref),
                            theta(ref_bottom, flank_bottom, vol, ref));
    double mean = 0.0;
    if (mean_mode == PrcMean::Union) {
      const auto all = concat(in_top, in_bottom);
      for (const float c : all) mean += c;
      mean /= static_cast<double>(all.size());
    } else {
      double mt = 0.0, mb = 0.0;
      for (const float c : in_top) mt += c;
      for (const float c : in_bottom) mb += c;
      mean = (mt / in_top.size() + mb / in_bottom.size()) / 2.0;
    }
    return mean < static_cast<double>(*std::min_element(out.begin(), out.end()));
  };
  return direction(patch.left_top, patch.left_bottom, patch.right_top, patch.right_bottom,
                   patch.right_top_flank, patch.right_bottom_flank, cost_left, Reference::Left) &&
         direction(patch.right_top, patch.right_bottom, patch.left_top, patch.left_bottom,
                   patch.left_top_flank, patch.left_bottom_flank, cost_right, Reference::Right);
}

bool local_minimum_ok(Pixel left_pixel, int d, const PatchPair& patch,
                      const CostVolume& cost_left, const CostVolume& cost_right) {
  const auto flank_l = concat(theta(patch.left_top, patch.right_top_flank, cost_left),
                              theta(patch.left_bottom, patch.right_bottom_flank, cost_left));
  const auto flank_r =
      concat(theta(patch.right_top, patch.left_top_flank, cost_right, Reference::Right),
             theta(patch.right_bottom, patch.left_bottom_flank, cost_right, Reference::Right));
  const float min_l = *std::min_element(flank_l.begin(), flank_l.end());
  const float min_r = *std::min_element(flank_r.begin(), flank_r.end());
  const Pixel right_pixel{left_pixel.u - d, left_pixel.v};
  return strict_local_min(cost_left, left_pixel, d, min_l) &&
         strict_local_min(cost_right, right_pixel, d, min_r);
}

std::vector<InheritedMatch> evaluate_patch(const PatchPair& patch, const CostVolume& cost_left,
                                           const CostVolume& cost_right, PrcMean mean_mode) {
  std::vector<InheritedMatch> out;
  const DirectionTerms lt = left_terms(patch, cost_left, mean_mode);
  if (!lt.reliable) return out;
  const DirectionTerms rt = right_terms(patch, cost_right, mean_mode);
  if (!rt.reliable) return out;

  for (const auto& [lrow, rrow] : {std::pair{patch.left_top, patch.right_top},
                                   std::pair{patch.left_bottom, patch.right_bottom}}) {
    for (const Pixel pl : lrow) {
      for (const Pixel pr : rrow) {
        const int d = pl.u - pr.u;
        if (strict_local_min(cost_left, pl, d, lt.flank_min) &&
            strict_local_min(cost_right, pr, d, rt.flank_min)) {
          out.push_back({pl, pr, d, cost_left.cost(pl.u, pl.v, d)});
        }
      }
    }
  }
  return out;
}

void assign_min_cost(DisparityMap& map, std::vector<float>& costs, Pixel p, int d, float cost) {
  const std::size_t i = static_cast<std::size_t>(p.v) * map.width() + p.u;
  const DisparityState old = map(p);
  if (old.is_decisive() &&
      (costs[i] < cost || (costs[i] == cost && old.disparity() <= d))) {
    return;
  }
  map(p) = DisparityState::decisive(d);
  costs[i] = cost;
}

InheritanceResult inherit(const DisparityMap& parent, const CostVolume& cost_left,
                          const CostVolume& cost_right, PrcMean mean_mode,
                          std::span<const int> row_shift) {
  const int W = cost_left.width();
  const int H = cost_left.height();
  if (cost_right.width() != W || cost_right.height() != H) {
    throw Error(ErrorCode::DimensionMismatch, "left/right cost volumes differ in size");
  }
  if (!is_halving(W, parent.width()) || !is_halving(H, parent.height())) {
    throw Error(ErrorCode::DimensionMismatch, "parent map is not half the child resolution");
  }

  // Matches are gathered per parent row in parallel, then merged in row order.
  std::vector<std::vector<InheritedMatch>> per_row(static_cast<std::size_t>(parent.height()));
  parallel_rows(0, parent.height(), [&](int v0, int v1) {
    for (int v = v0; v < v1; ++v) {
      auto& bucket = per_row[static_cast<std::size_t>(v)];
      for (int u = 0; u < parent.width(); ++u) {
        const DisparityState s = parent(u, v);
        if (!s.is_decisive()) continue;
        const auto patch = try_expand_match({u, v}, s.disparity(), W, H, row_shift);
        if (!patch) continue;
        auto matches = evaluate_patch(*patch, cost_left, cost_right, mean_mode);
        bucket.insert(bucket.end(), matches.begin(), matches.end());
      }
    }
  });

  InheritanceResult out{DisparityMap(W, H, cost_left.level()), DisparityMap(W, H, cost_left.level())};
  std::vector<float> left_cost(static_cast<std::size_t>(W) * H, std::numeric_limits<float>::infinity());
  std::vector<float> right_cost(left_cost);
  for (const auto& bucket : per_row) {
    for (const auto& m : bucket) {
      assign_min_cost(out.left, left_cost, m.left, m.d, m.cost);
      assign_min_cost(out.right, right_cost, m.right, m.d, m.cost);
    }
  }
  return out;
}

}  // namespace d3stereo
