#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "d3stereo/core.hpp"
#include "d3stereo/pyramid.hpp"

namespace d3stereo::io {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);

struct PfmImage {
  GrayImage raster;  // top-down rows
  float scale = -1.0f;
};

// Grayscale "Pf" only. Negative scale means little-endian payload. Rows are
// flipped from PFM's bottom-up order.
PfmImage parse_pfm(const Bytes& bytes);
PfmImage read_pfm(const std::filesystem::path& path);

// Little-endian unless `scale` is positive. |scale| is written verbatim.
Bytes encode_pfm(const GrayImage& raster, float scale = -1.0f);
void write_pfm(const GrayImage& raster, const std::filesystem::path& path, float scale = -1.0f);

// D3FP feature pyramid container:
//   "D3FP" | u32 version=1 | u32 levels | levels x (u32 H, u32 W, u32 C)
//   | per level H*W*C f32, channel-minor. Everything little-endian.
FeaturePyramid parse_feature_pyramid(const Bytes& bytes);
FeaturePyramid read_feature_pyramid(const std::filesystem::path& path);
Bytes encode_feature_pyramid(const FeaturePyramid& pyramid);
void write_feature_pyramid(const FeaturePyramid& pyramid, const std::filesystem::path& path);

// 8-bit PGM (P5), PPM (P6) or PNG. Color inputs are converted with
// Y = 0.299R + 0.587G + 0.114B.
GrayImage read_image(const std::filesystem::path& path);
ColorImage read_color_image(const std::filesystem::path& path);
GrayImage decode_image(const Bytes& bytes);
ColorImage decode_color_image(const Bytes& bytes);

// Intensities are rounded and clamped to [0, 255].
void write_pgm(const GrayImage& img, const std::filesystem::path& path);
void write_png(const GrayImage& img, const std::filesystem::path& path);
void write_png(const ColorImage& img, const std::filesystem::path& path);

// Jet color map over [0, d_max]; NaN and negative values render black.
ColorImage colorize_disparity(const GrayImage& disparity, float d_max);

// Cost volume dump:
//   "D3CV" | u32 version=1 | u32 W | u32 H | u32 d_max | u32 level
//   | W*H*(d_max+1) f32 costs | same count of u8 sentinel flags.
Bytes encode_cost_volume(const CostVolume& volume);
CostVolume parse_cost_volume(const Bytes& bytes);
void write_cost_volume(const CostVolume& volume, const std::filesystem::path& path);
CostVolume read_cost_volume(const std::filesystem::path& path);

}  // namespace d3stereo::io
