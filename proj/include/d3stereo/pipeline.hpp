#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "d3stereo/core.hpp"
#include "d3stereo/metrics.hpp"
#include "d3stereo/perspective.hpp"
#include "d3stereo/pyramid.hpp"

namespace d3stereo {

struct LevelRecord {
  int level = 0;
  int d_max = 0;          // searched range (residual range when transformed)
  double seconds = 0.0;
  double seed_density = 0.0;
  double dense_density = 0.0;
  int iterations = 0;
  std::uint64_t evaluations = 0;
  std::uint64_t candidates_evaluated = 0;
  bool transformed = false;
};

struct RunManifest {
  std::string left_path;
  std::string right_path;
  std::string ground_truth_path;
  std::string features_left_path;
  std::string features_right_path;
  PipelineConfig config;
  std::string config_hash;
  int worker_threads = 1;
  // Coarsest first, one entry per level.
  std::vector<LevelRecord> levels;
  bool pt_applied = false;
  std::optional<RoadDisparityModel> road_model;
  std::string pt_note;
  int output_level = 1;  // pyramid level the matcher's finest map lives at
  double total_seconds = 0.0;

  std::string to_text() const;
};

struct PipelineInputs {
  GrayImage left;
  GrayImage right;
  std::optional<GrayImage> ground_truth;
  // Cosine mode only.
  std::optional<FeaturePyramid> features_left;
  std::optional<FeaturePyramid> features_right;
  std::vector<double> pep_deltas{0.5, 1.0, 2.0, 3.0};
  // Per-level seed and dense maps are written here when set.
  std::optional<std::filesystem::path> debug_dump;
};

struct PipelineResult {
  DisparityMap map;                   // integer absolute disparities at output_level
  GrayImage disparity;                // full-resolution f32, NaN = no estimate
  std::vector<int> shift;             // per-row shift at output_level; empty without PT
  std::optional<MetricReport> metrics;
  RunManifest manifest;
};

/// Runs the full coarse-to-fine matcher. Errors are rethrown with the failing
/// stage prefixed to the message.
PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config);

/// Layer-k seeding only: aggregated coarsest-level volumes and their seeds.
DisparityMap run_seeding(const GrayImage& left, const GrayImage& right,
                         const PipelineConfig& config);

/// Writes `<stem>.disp.pfm`, `<stem>.disp.png`, `<stem>.manifest.txt` and,
/// with PT, `<stem>.shift.pfm` (scale magnitude = residual offset).
void write_outputs(const PipelineResult& result, const std::filesystem::path& stem);

}  // namespace d3stereo
