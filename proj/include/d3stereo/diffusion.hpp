#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "d3stereo/core.hpp"

namespace d3stereo {

struct DiffusionParams {
  int tau = 1;       // disparity search bound
  int kappa_d = 1;   // neighborhood radius
  int lrdc_tol = 1;

  static DiffusionParams from(const PipelineConfig& config) {
    return {config.tau, config.kappa_d, config.lrdc_tol};
  }
};

/// Bookkeeping for one diffusion run: pixels pending evaluation and, for every
/// pixel that has held a Decisive state, the lowest cost it has accepted.
class DiffusionFrontier {
 public:
  DiffusionFrontier(int width, int height);

  // Seeds the history from the Decisive pixels of `map` and queues every
  // non-Invalid pixel that has a Decisive neighbor within `kappa_d`.
  void initialize(const DisparityMap& map, const CostVolume& cost_left, int kappa_d);

  const std::vector<Pixel>& pending() const noexcept { return pending_; }
  int iteration() const noexcept { return iteration_; }

  bool has_history(Pixel p) const { return history_[index(p)] == history_[index(p)]; }
  float history(Pixel p) const { return history_[index(p)]; }
  void record(Pixel p, float cost) { history_[index(p)] = cost; }

  // Replaces the pending set with the neighborhoods of `changed`, sorted and
  // deduplicated, and advances the iteration counter.
  void advance(const std::vector<Pixel>& changed, int kappa_d);

 private:
  std::size_t index(Pixel p) const noexcept {
    return static_cast<std::size_t>(p.v) * width_ + p.u;
  }

  int width_;
  int height_;
  int iteration_ = 0;
  std::vector<Pixel> pending_;
  std::vector<float> history_;  // NaN = no history
};

struct DiffusionStats {
  int iterations = 0;
  std::uint64_t evaluations = 0;           // pixels evaluated
  std::uint64_t candidates_evaluated = 0;  // sum of candidate-set sizes
};

/// Union over Decisive q within kappa_d of {d(q) + r : |r| <= tau}, sorted,
/// deduplicated and clipped to [0, d_max].
std::vector<int> candidate_set(Pixel p, const DisparityMap& map, int tau, int kappa_d, int d_max);

/// Cheapest candidate s for p; Decisive(s) when C_L(p,s) is a strict local
/// minimum over s-1, s+1 and the right view's cheapest candidate at
/// p - (s,0) lies within lrdc_tol of s. Otherwise Unknown.
DisparityState evaluate_state(Pixel p, std::span<const int> candidates,
                              const CostVolume& cost_left, const CostVolume& cost_right,
                              int lrdc_tol);

/// Adversarial rule: a previously Decisive pixel moves to a new state only
/// when the new candidate minimum is no worse than its best accepted cost.
/// Ties favor the newer state.
bool adversarial_ok(float history_best, float candidate_min);

/// Intra-scale decisive disparity diffusion. Iterations read the previous
/// map and write a fresh one, so the result does not depend on visit order
/// or worker count. Throws DiffusionDiverged after width * height iterations.
DisparityMap diffuse(const DisparityMap& sparse, const CostVolume& cost_left,
                     const CostVolume& cost_right, const DiffusionParams& params,
                     DiffusionStats* stats = nullptr);

}  // namespace d3stereo
