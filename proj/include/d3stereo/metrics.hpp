#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "d3stereo/core.hpp"

namespace d3stereo {

// Disparity rasters: an estimate pixel is valid when finite and >= 0 (NaN marks
// Unknown, -1 Invalid); a ground-truth pixel is valid when finite.

/// Mean |est - gt| over pixels valid in both.
double epe(const GrayImage& est, const GrayImage& gt);

/// 100 * fraction of jointly valid pixels with |est - gt| > delta.
double pep(const GrayImage& est, const GrayImage& gt, double delta);

/// Fraction of ground-truth-valid pixels that also have a valid estimate.
double valid_fraction(const GrayImage& est, const GrayImage& gt);

using Mask = std::vector<std::uint8_t>;

struct WarpResult {
  GrayImage image;
  Mask mask;  // 1 where the warped value is defined
};

/// out(p) = right(p - (d(p), 0)) with linear interpolation along the row.
WarpResult warp_right_to_left(const GrayImage& right, const GrayImage& est);

struct PsnrMse {
  double psnr = 0.0;  // dB; 99.0 when the images agree exactly
  double mse = 0.0;
};

inline constexpr double kPsnrIdentical = 99.0;

PsnrMse psnr_mse(const GrayImage& a, const GrayImage& b, const Mask& mask = {});

/// Mean SSIM over 11x11 Gaussian (sigma 1.5) windows lying entirely inside
/// the image and the mask; C1 = (0.01*255)^2, C2 = (0.03*255)^2.
double ssim(const GrayImage& a, const GrayImage& b, const Mask& mask = {});

/// Parabolic sub-pixel refinement of Decisive pixels against `volume`;
/// `shift` (per row, optional) is added afterwards. Non-decisive pixels
/// become NaN.
GrayImage refine_subpixel(const DisparityMap& map, const CostVolume& volume,
                          const std::vector<int>& shift = {});

struct MetricReport {
  std::optional<double> epe;
  std::map<double, double> pep;  // delta -> percentage
  std::optional<double> psnr;
  std::optional<double> mse;
  std::optional<double> ssim;
  double valid_fraction = 0.0;

  // "key=value" lines.
  std::string to_text() const;
  // Single tab-separated ledger row.
  std::string to_ledger_row(const std::string& dataset, const std::string& pair,
                            const std::string& config_hash) const;
};

/// Disparity metrics against ground truth.
MetricReport evaluate_disparity(const GrayImage& est, const GrayImage& gt,
                                const std::vector<double>& deltas);

/// Reconstruction metrics: warps `right` with `est` and compares with `left`.
MetricReport evaluate_reconstruction(const GrayImage& left, const GrayImage& right,
                                     const GrayImage& est);

void append_ledger_row(const std::filesystem::path& ledger, const std::string& row);

}  // namespace d3stereo
