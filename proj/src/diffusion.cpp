#include "d3stereo/diffusion.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "d3stereo/parallel.hpp"

namespace d3stereo {
namespace {

void collect_candidates(Pixel p, const DisparityMap& map, int tau, int kappa_d, int d_max,
                        std::vector<int>& out) {
  out.clear();
  for (int dv = -kappa_d; dv <= kappa_d; ++dv) {
    const int v = p.v + dv;
    if (v < 0 || v >= map.height()) continue;
    for (int du = -kappa_d; du <= kappa_d; ++du) {
      const int u = p.u + du;
      if ((du == 0 && dv == 0) || u < 0 || u >= map.width()) continue;
      const DisparityState s = map(u, v);
      if (!s.is_decisive()) continue;
      for (int r = -tau; r <= tau; ++r) {
        const int d = s.disparity() + r;
        if (d >= 0 && d <= d_max) out.push_back(d);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

// Cheapest non-sentinel candidate at (u, v), ties to the smaller disparity.
int cheapest(const CostVolume& vol, int u, int v, std::span<const int> candidates) {
  int best = -1;
  for (const int d : candidates) {
    if (d < 0 || d > vol.d_max() || vol.is_sentinel(u, v, d)) continue;
    if (best < 0 || vol.cost(u, v, d) < vol.cost(u, v, best)) best = d;
  }
  return best;
}

bool has_decisive_neighbor(const DisparityMap& map, Pixel p, int kappa_d) {
  for (int dv = -kappa_d; dv <= kappa_d; ++dv) {
    const int v = p.v + dv;
    if (v < 0 || v >= map.height()) continue;
    for (int du = -kappa_d; du <= kappa_d; ++du) {
      const int u = p.u + du;
      if ((du == 0 && dv == 0) || u < 0 || u >= map.width()) continue;
      if (map(u, v).is_decisive()) return true;
    }
  }
  return false;
}

}  // namespace

DiffusionFrontier::DiffusionFrontier(int width, int height)
    : width_(width), height_(height),
      history_(static_cast<std::size_t>(width) * height, std::numeric_limits<float>::quiet_NaN()) {}

void DiffusionFrontier::initialize(const DisparityMap& map, const CostVolume& cost_left,
                                   int kappa_d) {
  pending_.clear();
  iteration_ = 0;
  for (int v = 0; v < height_; ++v) {
    for (int u = 0; u < width_; ++u) {
      const DisparityState s = map(u, v);
      if (s.is_decisive()) record({u, v}, cost_left.cost_or_sentinel(u, v, s.disparity()));
      if (!s.is_invalid() && has_decisive_neighbor(map, {u, v}, kappa_d)) pending_.push_back({u, v});
    }
  }
}

void DiffusionFrontier::advance(const std::vector<Pixel>& changed, int kappa_d) {
  std::vector<std::uint8_t> mark(static_cast<std::size_t>(width_) * height_, 0);
  for (const Pixel p : changed) {
    for (int dv = -kappa_d; dv <= kappa_d; ++dv) {
      const int v = p.v + dv;
      if (v < 0 || v >= height_) continue;
      for (int du = -kappa_d; du <= kappa_d; ++du) {
        const int u = p.u + du;
        if ((du == 0 && dv == 0) || u < 0 || u >= width_) continue;
        mark[static_cast<std::size_t>(v) * width_ + u] = 1;
      }
    }
  }
  // Scanning the mask yields the sorted, deduplicated set directly.
  pending_.clear();
  for (int v = 0; v < height_; ++v) {
    for (int u = 0; u < width_; ++u) {
      if (mark[static_cast<std::size_t>(v) * width_ + u]) pending_.push_back({u, v});
    }
  }
  ++iteration_;
}

std::vector<int> candidate_set(Pixel p, const DisparityMap& map, int tau, int kappa_d,
                               int d_max) {
  std::vector<int> out;
  collect_candidates(p, map, tau, kappa_d, d_max, out);
  return out;
}

DisparityState evaluate_state(Pixel p, std::span<const int> candidates,
                              const CostVolume& cost_left, const CostVolume& cost_right,
                              int lrdc_tol) {
  const int s = cheapest(cost_left, p.u, p.v, candidates);
  if (s < 0) return DisparityState::unknown();

  const float c = cost_left.cost(p.u, p.v, s);
  if (!(c < cost_left.cost_or_sentinel(p.u, p.v, s - 1) &&
        c < cost_left.cost_or_sentinel(p.u, p.v, s + 1))) {
    return DisparityState::unknown();
  }

  const int qu = p.u - s;
  if (qu < 0 || qu >= cost_right.width()) return DisparityState::unknown();
  const int s_right = cheapest(cost_right, qu, p.v, candidates);
  if (s_right < 0 || std::abs(s - s_right) > lrdc_tol) return DisparityState::unknown();
  return DisparityState::decisive(s);
}

bool adversarial_ok(float history_best, float candidate_min) {
  return !(history_best < candidate_min);
}

DisparityMap diffuse(const DisparityMap& sparse, const CostVolume& cost_left,
                     const CostVolume& cost_right, const DiffusionParams& params,
                     DiffusionStats* stats) {
  const int W = sparse.width();
  const int H = sparse.height();
  if (cost_left.width() != W || cost_left.height() != H || cost_right.width() != W ||
      cost_right.height() != H) {
    throw Error(ErrorCode::DimensionMismatch, "disparity map and cost volumes differ in size");
  }
  const int d_max = cost_left.d_max();
  const long long cap = static_cast<long long>(W) * H;

  DiffusionFrontier frontier(W, H);
  frontier.initialize(sparse, cost_left, params.kappa_d);
  DisparityMap current = sparse;
  std::atomic<std::uint64_t> evaluations{0};
  std::atomic<std::uint64_t> candidates_evaluated{0};

  while (!frontier.pending().empty()) {
    if (frontier.iteration() >= cap) {
      throw Error(ErrorCode::DiffusionDiverged,
                  "no convergence after " + std::to_string(cap) + " iterations");
    }
    const auto& pending = frontier.pending();
    DisparityMap next = current;
    std::vector<std::uint8_t> changed(pending.size(), 0);

    parallel_rows(0, static_cast<int>(pending.size()), [&](int i0, int i1) {
      std::vector<int> cands;
      std::uint64_t evals = 0;
      std::uint64_t cand_total = 0;
      for (int i = i0; i < i1; ++i) {
        const Pixel p = pending[static_cast<std::size_t>(i)];
        const DisparityState now = current(p);
        if (now.is_invalid()) continue;
        collect_candidates(p, current, params.tau, params.kappa_d, d_max, cands);
        if (cands.empty()) continue;
        ++evals;
        cand_total += cands.size();
        const DisparityState proposed =
            evaluate_state(p, cands, cost_left, cost_right, params.lrdc_tol);
        if (!proposed.is_decisive() || proposed == now) continue;
        const float cost = cost_left.cost(p.u, p.v, proposed.disparity());
        if (now.is_decisive() && !adversarial_ok(frontier.history(p), cost)) continue;
        next(p) = proposed;
        // Each pending pixel is unique, so history writes never collide.
        frontier.record(p, cost);
        changed[static_cast<std::size_t>(i)] = 1;
      }
      evaluations.fetch_add(evals, std::memory_order_relaxed);
      candidates_evaluated.fetch_add(cand_total, std::memory_order_relaxed);
    });

    std::vector<Pixel> changed_pixels;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (changed[i]) changed_pixels.push_back(pending[i]);
    }
    current = std::move(next);
    frontier.advance(changed_pixels, params.kappa_d);
  }

  if (stats) {
    stats->iterations = frontier.iteration();
    stats->evaluations = evaluations.load();
    stats->candidates_evaluated = candidates_evaluated.load();
  }
  return current;
}

}  // namespace d3stereo
