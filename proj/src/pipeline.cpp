#include "d3stereo/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "d3stereo/diffusion.hpp"
#include "d3stereo/inheritance.hpp"
#include "d3stereo/io.hpp"
#include "d3stereo/parallel.hpp"
#include "d3stereo/rbf.hpp"
#include "d3stereo/seeds.hpp"

namespace d3stereo {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class Fn>
auto staged(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw Error(e, stage);
  }
}

std::string level_tag(const std::string& stage, int level) {
  return stage + " (level " + std::to_string(level) + ")";
}

// Nearest-neighbour resample, used when no image pyramid level matches a
// feature level's size.
GrayImage resample_nearest(const GrayImage& img, int width, int height) {
  GrayImage out(width, height);
  for (int v = 0; v < height; ++v) {
    const int sv = std::min(img.height() - 1, v * img.height() / height);
    for (int u = 0; u < width; ++u) {
      out(u, v) = img(std::min(img.width() - 1, u * img.width() / width), sv);
    }
  }
  return out;
}

// Per-level inputs. Pipeline level i (1 = finest) sits at absolute pyramid
// level base + i - 1 of the full-resolution images.
struct LevelInputs {
  int base = 1;
  std::vector<GrayImage> guide;        // left intensities per pipeline level
  std::vector<GrayImage> right;        // NCC mode
  std::vector<FeatureMap> feat_left;   // cosine mode
  std::vector<FeatureMap> feat_right;

  int absolute(int i) const { return base + i - 1; }
};

LevelInputs prepare_levels(const PipelineInputs& in, const PipelineConfig& config) {
  LevelInputs out;
  if (in.left.width() != in.right.width() || in.left.height() != in.right.height()) {
    throw Error(ErrorCode::DimensionMismatch, "left and right images differ in size");
  }
  if (config.cost_mode.kind == CostMode::Kind::Ncc) {
    const ImagePyramid left = build_image_pyramid(in.left, config.k, config.min_coarse_side);
    const ImagePyramid right = build_image_pyramid(in.right, config.k, config.min_coarse_side);
    out.guide = left.levels;
    out.right = right.levels;
    return out;
  }

  if (!in.features_left || !in.features_right) {
    throw Error(ErrorCode::MalformedInput, "cosine mode needs left and right feature pyramids");
  }
  const FeaturePyramid& fl = *in.features_left;
  const FeaturePyramid& fr = *in.features_right;
  if (fl.depth() < config.k || fr.depth() < config.k) {
    throw Error(ErrorCode::DimensionMismatch, "feature pyramids shallower than k");
  }
  for (int i = 0; i < config.k; ++i) {
    const auto& a = fl.levels[static_cast<std::size_t>(i)];
    const auto& b = fr.levels[static_cast<std::size_t>(i)];
    if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
      throw Error(ErrorCode::DimensionMismatch, "left/right feature level " +
                                                    std::to_string(i + 1) + " differ in shape");
    }
  }
  const FeatureMap& finest = fl.levels.front();
  const double ratio = static_cast<double>(in.left.width()) / finest.width;
  out.base = 1 + std::max(0, static_cast<int>(std::lround(std::log2(ratio))));

  std::vector<GrayImage> images{in.left};
  while (images.back().width() > 1 && images.back().height() > 1 &&
         static_cast<int>(images.size()) < out.base + config.k) {
    images.push_back(downsample(images.back()));
  }
  for (int i = 0; i < config.k; ++i) {
    const FeatureMap& f = fl.levels[static_cast<std::size_t>(i)];
    const GrayImage* match = nullptr;
    for (const auto& img : images) {
      if (img.width() == f.width && img.height() == f.height) match = &img;
    }
    if (match) {
      out.guide.push_back(*match);
    } else {
      const std::size_t nearest =
          std::min(images.size() - 1, static_cast<std::size_t>(out.base - 1 + i));
      out.guide.push_back(resample_nearest(images[nearest], f.width, f.height));
    }
    out.feat_left.push_back(f);
    out.feat_right.push_back(fr.levels[static_cast<std::size_t>(i)]);
  }
  return out;
}

struct LevelVolumes {
  CostVolume left;
  CostVolume right;
};

LevelVolumes build_volumes(const LevelInputs& in, int i, const PipelineConfig& config,
                           std::span<const int> shift) {
  const auto idx = static_cast<std::size_t>(i - 1);
  const int level = in.absolute(i);
  const int d_max = shift.empty() ? level_d_max(config.d_max_full, level)
                                  : 2 * ceil_div_pow2(config.pt_offset, level - 1);
  const GrayImage& guide = in.guide[idx];
  CostVolume cl = staged(level_tag("cost volume", level), [&] {
    if (config.cost_mode.kind == CostMode::Kind::Ncc) {
      if (shift.empty()) {
        return cost_volume_ncc(guide, in.right[idx], d_max, config.cost_mode.block_radius);
      }
      const PerspectiveResult moved = shift_rows(in.right[idx], shift);
      return cost_volume_ncc(guide, moved.image, d_max, config.cost_mode.block_radius,
                             moved.valid);
    }
    if (shift.empty()) return cost_volume_cosine(in.feat_left[idx], in.feat_right[idx], d_max);
    std::vector<std::uint8_t> valid;
    const FeatureMap moved = shift_rows(in.feat_right[idx], shift, &valid);
    return cost_volume_cosine(in.feat_left[idx], moved, d_max, valid);
  });
  cl.set_level(level);
  CostVolume aggregated = staged(level_tag("rbf", level), [&] {
    return rbf_aggregate(cl, guide, RbfKernelParams::from(config));
  });
  CostVolume cr = right_reference(aggregated);
  return {std::move(aggregated), std::move(cr)};
}

void fill_record(LevelRecord& r, const DisparityMap& seeds, const DisparityMap& dense,
                 const DiffusionStats& stats) {
  r.seed_density = density(seeds);
  r.dense_density = density(dense);
  r.iterations = stats.iterations;
  r.evaluations = stats.evaluations;
  r.candidates_evaluated = stats.candidates_evaluated;
}

void dump_level(const std::optional<std::filesystem::path>& dir, int level,
                const DisparityMap& seeds, const DisparityMap& dense) {
  if (!dir) return;
  std::filesystem::create_directories(*dir);
  const std::string prefix = "level" + std::to_string(level);
  io::write_pfm(seeds.to_raster(), *dir / (prefix + ".seeds.pfm"));
  io::write_pfm(dense.to_raster(), *dir / (prefix + ".dense.pfm"));
}

GrayImage upsample_disparity(const GrayImage& disp, int factor, int width, int height) {
  GrayImage out(width, height, std::numeric_limits<float>::quiet_NaN());
  for (int v = 0; v < height; ++v) {
    const int sv = std::min(disp.height() - 1, v / factor);
    for (int u = 0; u < width; ++u) {
      const float d = disp(std::min(disp.width() - 1, u / factor), sv);
      if (std::isfinite(d)) out(u, v) = d * static_cast<float>(factor);
    }
  }
  return out;
}

}  // namespace

std::string RunManifest::to_text() const {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "left=" << left_path << '\n'
     << "right=" << right_path << '\n';
  if (!ground_truth_path.empty()) os << "ground_truth=" << ground_truth_path << '\n';
  if (!features_left_path.empty()) os << "features_left=" << features_left_path << '\n';
  if (!features_right_path.empty()) os << "features_right=" << features_right_path << '\n';
  os << "config=" << config.canonical_string() << '\n'
     << "config_hash=" << config_hash << '\n'
     << "worker_threads=" << worker_threads << '\n'
     << "output_level=" << output_level << '\n'
     << "pt_applied=" << (pt_applied ? 1 : 0) << '\n';
  if (road_model) {
    os << "pt_alpha0=" << road_model->alpha0 << '\n'
       << "pt_alpha1=" << road_model->alpha1 << '\n'
       << "pt_inlier_fraction=" << road_model->inlier_fraction << '\n';
  }
  if (pt_applied) {
    os << "pt_residual_offset=" << config.pt_offset << '\n'
       << "pt_rebuilt_levels=1.." << (config.k - 1) << " (level " << config.k
       << " kept from the untransformed bootstrap)\n";
  }
  if (!pt_note.empty()) os << "pt_note=" << pt_note << '\n';
  for (const auto& r : levels) {
    os << "level." << r.level << "=seconds:" << r.seconds << " seed_density:" << r.seed_density
       << " dense_density:" << r.dense_density << " iterations:" << r.iterations
       << " evaluations:" << r.evaluations << " candidates:" << r.candidates_evaluated
       << " d_max:" << r.d_max << " transformed:" << (r.transformed ? 1 : 0) << '\n';
  }
  os << "total_seconds=" << total_seconds << '\n';
  return os.str();
}

PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config) {
  staged("config", [&] { config.validate(); });
  const auto start = Clock::now();

  PipelineResult result;
  RunManifest& m = result.manifest;
  m.config = config;
  m.config_hash = config.hash();
  m.worker_threads = worker_count();

  const int k = config.k;
  const DiffusionParams params = DiffusionParams::from(config);

  // Coarsest level: bootstrap from the untransformed pair.
  auto level_start = Clock::now();
  const LevelInputs in = staged("pyramid", [&] { return prepare_levels(inputs, config); });
  m.output_level = in.base;

  LevelRecord coarse{in.absolute(k)};
  LevelVolumes vols = build_volumes(in, k, config, {});
  coarse.d_max = vols.left.d_max();
  DisparityMap seeds = staged(level_tag("seeds", in.absolute(k)), [&] {
    return init_seeds(vols.left, vols.right, config.gamma, config.lrdc_tol);
  });
  seeds.set_level(in.absolute(k));
  DiffusionStats stats;
  DisparityMap dense = staged(level_tag("diffusion", in.absolute(k)), [&] {
    return diffuse(seeds, vols.left, vols.right, params, &stats);
  });
  dense.set_level(in.absolute(k));
  fill_record(coarse, seeds, dense, stats);
  dump_level(inputs.debug_dump, in.absolute(k), seeds, dense);

  std::optional<RoadDisparityModel> model;
  if (config.use_pt) {
    try {
      const RoadDisparityModel fitted = fit_road_model(dense);
      m.road_model = fitted;
      if (fitted.inlier_fraction >= kMinRoadInlierFraction) {
        model = fitted;
        m.pt_applied = true;
      } else {
        m.pt_note = "fell back to untransformed matching: road model inlier fraction below " +
                    std::to_string(kMinRoadInlierFraction);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientSeeds && e.code() != ErrorCode::DegenerateFit) {
        throw Error(e, "perspective fit");
      }
      m.pt_note = std::string("fell back to untransformed matching: ") + e.what();
    }
  }
  coarse.seconds = seconds_since(level_start);
  m.levels.push_back(coarse);

  DisparityMap parent = dense;
  DisparityMap residual = dense;
  std::vector<int> shift;
  for (int i = k - 1; i >= 1; --i) {
    level_start = Clock::now();
    const int level = in.absolute(i);
    const auto idx = static_cast<std::size_t>(i - 1);
    const int height = in.guide[idx].height();
    shift = model ? row_shifts(model->at_level(level), height,
                               ceil_div_pow2(config.pt_offset, level - 1))
                  : std::vector<int>{};
    vols = build_volumes(in, i, config, shift);

    LevelRecord rec{level};
    rec.d_max = vols.left.d_max();
    rec.transformed = model.has_value();
    const InheritanceResult inherited = staged(level_tag("inheritance", level), [&] {
      return inherit(parent, vols.left, vols.right, config.prc_mean, shift);
    });
    stats = {};
    residual = staged(level_tag("diffusion", level), [&] {
      return diffuse(inherited.left, vols.left, vols.right, params, &stats);
    });
    residual.set_level(level);
    parent = shift.empty() ? residual : recompose(residual, shift);
    parent.set_level(level);
    fill_record(rec, inherited.left, residual, stats);
    dump_level(inputs.debug_dump, level, inherited.left, parent);
    rec.seconds = seconds_since(level_start);
    m.levels.push_back(rec);
  }

  level_start = Clock::now();
  const GrayImage refined = refine_subpixel(residual, vols.left, shift);
  const int factor = 1 << (in.base - 1);
  result.disparity = factor == 1 ? refined
                                 : upsample_disparity(refined, factor, inputs.left.width(),
                                                      inputs.left.height());
  result.map = parent;
  result.shift = shift;
  m.levels.back().seconds += seconds_since(level_start);
  m.total_seconds = seconds_since(start);

  if (inputs.ground_truth) {
    result.metrics = staged("metrics", [&] {
      MetricReport report = evaluate_disparity(result.disparity, *inputs.ground_truth,
                                               inputs.pep_deltas);
      try {
        const MetricReport recon =
            evaluate_reconstruction(inputs.left, inputs.right, result.disparity);
        report.psnr = recon.psnr;
        report.mse = recon.mse;
        report.ssim = recon.ssim;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoValidPixels && e.code() != ErrorCode::NoValidWindows) throw;
      }
      return report;
    });
  }
  return result;
}

DisparityMap run_seeding(const GrayImage& left, const GrayImage& right,
                         const PipelineConfig& config) {
  staged("config", [&] { config.validate(); });
  PipelineInputs inputs;
  inputs.left = left;
  inputs.right = right;
  const LevelInputs in = staged("pyramid", [&] { return prepare_levels(inputs, config); });
  const LevelVolumes vols = build_volumes(in, config.k, config, {});
  DisparityMap seeds = staged(level_tag("seeds", in.absolute(config.k)), [&] {
    return init_seeds(vols.left, vols.right, config.gamma, config.lrdc_tol);
  });
  seeds.set_level(in.absolute(config.k));
  return seeds;
}

void write_outputs(const PipelineResult& result, const std::filesystem::path& stem) {
  const std::string base = stem.string();
  io::write_pfm(result.disparity, base + ".disp.pfm");
  io::write_png(io::colorize_disparity(result.disparity,
                                       static_cast<float>(result.manifest.config.d_max_full)),
                base + ".disp.png");
  {
    std::ofstream out(base + ".manifest.txt");
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + base + ".manifest.txt");
    out << result.manifest.to_text();
  }
  if (!result.shift.empty()) {
    GrayImage table(1, static_cast<int>(result.shift.size()));
    for (std::size_t v = 0; v < result.shift.size(); ++v) {
      table(0, static_cast<int>(v)) = static_cast<float>(result.shift[v]);
    }
    const int offset =
        ceil_div_pow2(result.manifest.config.pt_offset, result.manifest.output_level - 1);
    io::write_pfm(table, base + ".shift.pfm", -static_cast<float>(offset));
  }
}

}  // namespace d3stereo
