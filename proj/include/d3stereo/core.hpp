#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "d3stereo/error.hpp"

namespace d3stereo {

// u = column, v = row, origin top-left. Rasters are row-major.
struct Pixel {
  int u = 0;
  int v = 0;

  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Single-channel f32 raster. Image intensities live in [0, 255]; the same
/// type carries PFM payloads (ground truth, shift tables).
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, float fill = 0.0f);
  GrayImage(int width, int height, std::vector<float> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }
  bool contains(int u, int v) const noexcept {
    return u >= 0 && v >= 0 && u < width_ && v < height_;
  }

  float operator()(int u, int v) const { return data_[index(u, v)]; }
  float& operator()(int u, int v) { return data_[index(u, v)]; }

  std::span<const float> row(int v) const {
    return {data_.data() + static_cast<std::size_t>(v) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<float> row(int v) {
    return {data_.data() + static_cast<std::size_t>(v) * width_, static_cast<std::size_t>(width_)};
  }
  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * width_ + u;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Interleaved 8-bit RGB raster.
struct ColorImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  GrayImage luminance() const;
};

inline constexpr float kSentinelCost = 1.0f;

/// Matching costs for disparities 0..d_max at every pixel, stored with the
/// disparity axis innermost so a pixel's cost curve is contiguous. Cells with
/// no valid correspondence are sentinels: cost exactly 1.0 and flagged, so
/// aggregation can skip them.
class CostVolume {
 public:
  CostVolume() = default;
  // All cells start as sentinels.
  CostVolume(int width, int height, int d_max, int level = 1);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int d_max() const noexcept { return d_max_; }
  int disparities() const noexcept { return d_max_ + 1; }
  int level() const noexcept { return level_; }
  void set_level(int level) noexcept { level_ = level; }
  bool empty() const noexcept { return costs_.empty(); }

  bool contains(int u, int v) const noexcept {
    return u >= 0 && v >= 0 && u < width_ && v < height_;
  }

  float cost(int u, int v, int d) const { return costs_[index(u, v, d)]; }
  bool is_sentinel(int u, int v, int d) const { return sentinel_[index(u, v, d)] != 0; }

  // Cost lookup that treats disparities outside [0, d_max] as sentinels.
  float cost_or_sentinel(int u, int v, int d) const {
    if (d < 0 || d > d_max_ || !contains(u, v)) return kSentinelCost;
    return costs_[index(u, v, d)];
  }

  void set(int u, int v, int d, float c) {
    const std::size_t i = index(u, v, d);
    costs_[i] = c;
    sentinel_[i] = 0;
  }
  void set_sentinel(int u, int v, int d) {
    const std::size_t i = index(u, v, d);
    costs_[i] = kSentinelCost;
    sentinel_[i] = 1;
  }

  std::span<const float> costs(int u, int v) const {
    return {costs_.data() + index(u, v, 0), static_cast<std::size_t>(disparities())};
  }
  std::span<const std::uint8_t> sentinels(int u, int v) const {
    return {sentinel_.data() + index(u, v, 0), static_cast<std::size_t>(disparities())};
  }

  const std::vector<float>& raw_costs() const noexcept { return costs_; }
  std::vector<float>& raw_costs() noexcept { return costs_; }
  const std::vector<std::uint8_t>& raw_sentinels() const noexcept { return sentinel_; }
  std::vector<std::uint8_t>& raw_sentinels() noexcept { return sentinel_; }

  std::size_t index(int u, int v, int d) const noexcept {
    return (static_cast<std::size_t>(v) * width_ + u) * static_cast<std::size_t>(d_max_ + 1) + d;
  }

  friend bool operator==(const CostVolume&, const CostVolume&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int d_max_ = 0;
  int level_ = 1;
  std::vector<float> costs_;
  std::vector<std::uint8_t> sentinel_;
};

/// Per-pixel disparity state: Unknown, Invalid, or Decisive(d) with d >= 0.
class DisparityState {
 public:
  constexpr DisparityState() = default;

  static constexpr DisparityState unknown() { return DisparityState(kUnknown); }
  static constexpr DisparityState invalid() { return DisparityState(kInvalid); }
  static DisparityState decisive(int d);

  constexpr bool is_decisive() const noexcept { return code_ >= 0; }
  constexpr bool is_unknown() const noexcept { return code_ == kUnknown; }
  constexpr bool is_invalid() const noexcept { return code_ == kInvalid; }
  // Only meaningful when decisive.
  constexpr int disparity() const noexcept { return code_; }

  friend constexpr bool operator==(DisparityState, DisparityState) = default;

 private:
  static constexpr std::int32_t kUnknown = -1;
  static constexpr std::int32_t kInvalid = -2;

  constexpr explicit DisparityState(std::int32_t code) : code_(code) {}

  std::int32_t code_ = kUnknown;
};

class DisparityMap {
 public:
  DisparityMap() = default;
  DisparityMap(int width, int height, int level = 1,
               DisparityState fill = DisparityState::unknown());

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int level() const noexcept { return level_; }
  void set_level(int level) noexcept { level_ = level; }
  bool contains(int u, int v) const noexcept {
    return u >= 0 && v >= 0 && u < width_ && v < height_;
  }
  bool contains(Pixel p) const noexcept { return contains(p.u, p.v); }

  DisparityState operator()(int u, int v) const { return states_[index(u, v)]; }
  DisparityState& operator()(int u, int v) { return states_[index(u, v)]; }
  DisparityState operator()(Pixel p) const { return states_[index(p.u, p.v)]; }
  DisparityState& operator()(Pixel p) { return states_[index(p.u, p.v)]; }

  const std::vector<DisparityState>& states() const noexcept { return states_; }
  std::vector<DisparityState>& states() noexcept { return states_; }

  std::size_t decisive_count() const noexcept;

  // Decisive -> d, Unknown -> NaN, Invalid -> -1. Lossless with from_raster.
  GrayImage to_raster() const;
  // NaN -> Unknown; negative or infinite -> Invalid; otherwise rounded to the
  // nearest integer disparity.
  static DisparityMap from_raster(const GrayImage& raster, int level = 1);

  friend bool operator==(const DisparityMap&, const DisparityMap&) = default;

 private:
  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * width_ + u;
  }

  int width_ = 0;
  int height_ = 0;
  int level_ = 1;
  std::vector<DisparityState> states_;
};

struct CostMode {
  enum class Kind { Ncc, CosineFeatures };
  Kind kind = Kind::Ncc;
  int block_radius = 2;  // NCC only; 5x5 blocks
};

// How the patch reliability test averages the two row-wise cost sets.
enum class PrcMean { Union, PerSet };

struct PipelineConfig {
  int k = 4;
  int d_max_full = 64;
  int tau = 1;
  int kappa_d = 1;
  int kappa_a = 1;
  int t_max = 4;
  double sigma1 = 2.0;
  double sigma2 = 10.0;
  double gamma = 1.05;
  int lrdc_tol = 1;
  CostMode cost_mode{};
  bool use_pt = true;
  // Residual search half-width at full resolution once the right view has been
  // perspective-transformed.
  int pt_offset = 8;
  PrcMean prc_mean = PrcMean::Union;
  // Smallest allowed side of the coarsest pyramid level.
  int min_coarse_side = 8;

  // Throws InvalidConfig when an invariant is violated.
  void validate() const;
  // Canonical one-line rendering used for hashing and manifests.
  std::string canonical_string() const;
  // 64-bit FNV-1a of canonical_string(), as 16 hex digits.
  std::string hash() const;
};

/// In-bounds pixels q != p within Chebyshev distance `radius`, row-major order.
std::vector<Pixel> neighborhood(Pixel p, int radius, int width, int height);

/// Fraction of Decisive pixels.
double density(const DisparityMap& map);

/// ceil(value / 2^exponent) for non-negative value.
int ceil_div_pow2(int value, int exponent);

}  // namespace d3stereo
