#include "d3stereo/pyramid.hpp"

#include <algorithm>
#include <cmath>

#include "d3stereo/parallel.hpp"

namespace d3stereo {
namespace {

// Total squared deviation below which a block is treated as flat.
constexpr double kFlatBlockThreshold = 1e-4;

bool right_pixel_ok(const std::vector<std::uint8_t>& right_valid, int width, int u, int v) {
  return right_valid.empty() || right_valid[static_cast<std::size_t>(v) * width + u] != 0;
}

}  // namespace

bool is_halving(int prev, int next) { return next == prev / 2 || next == (prev + 1) / 2; }

GrayImage downsample(const GrayImage& img) {
  const int w = (img.width() + 1) / 2;
  const int h = (img.height() + 1) / 2;
  GrayImage out(w, h);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      float sum = 0.0f;
      int n = 0;
      for (int dv = 0; dv < 2; ++dv) {
        for (int du = 0; du < 2; ++du) {
          const int su = 2 * u + du;
          const int sv = 2 * v + dv;
          if (su < img.width() && sv < img.height()) {
            sum += img(su, sv);
            ++n;
          }
        }
      }
      out(u, v) = sum / static_cast<float>(n);
    }
  }
  return out;
}

ImagePyramid build_image_pyramid(const GrayImage& img, int k, int min_coarse_side) {
  if (k < 2) throw Error(ErrorCode::InvalidConfig, "pyramid depth must be >= 2");
  const long long need = static_cast<long long>(min_coarse_side) << (k - 1);
  if (std::min(img.width(), img.height()) < need) {
    throw Error(ErrorCode::TooSmallForDepth,
                std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                    " image cannot support " + std::to_string(k) + " levels");
  }
  ImagePyramid pyr;
  pyr.levels.reserve(static_cast<std::size_t>(k));
  pyr.levels.push_back(img);
  for (int i = 1; i < k; ++i) pyr.levels.push_back(downsample(pyr.levels.back()));
  return pyr;
}

CostVolume cost_volume_ncc(const GrayImage& left, const GrayImage& right, int d_max,
                           int block_radius, const std::vector<std::uint8_t>& right_valid) {
  if (left.width() != right.width() || left.height() != right.height()) {
    throw Error(ErrorCode::DimensionMismatch, "NCC inputs differ in size");
  }
  if (block_radius < 1) throw Error(ErrorCode::InvalidConfig, "block_radius must be >= 1");
  const int W = left.width();
  const int H = left.height();
  CostVolume vol(W, H, d_max);
  const int r = block_radius;

  parallel_rows(0, H, [&](int v0, int v1) {
    for (int v = v0; v < v1; ++v) {
      const int y0 = std::max(0, v - r);
      const int y1 = std::min(H - 1, v + r);
      for (int u = 0; u < W; ++u) {
        for (int d = 0; d <= d_max; ++d) {
          const int ur = u - d;
          if (ur < 0 || !right_pixel_ok(right_valid, W, ur, v)) continue;  // sentinel
          const int dx0 = std::max(-r, -ur);
          const int dx1 = std::min(r, W - 1 - u);
          double n = 0, sl = 0, sr = 0, sll = 0, srr = 0, slr = 0;
          for (int y = y0; y <= y1; ++y) {
            for (int dx = dx0; dx <= dx1; ++dx) {
              if (!right_pixel_ok(right_valid, W, ur + dx, y)) continue;
              const double a = left(u + dx, y);
              const double b = right(ur + dx, y);
              n += 1;
              sl += a;
              sr += b;
              sll += a * a;
              srr += b * b;
              slr += a * b;
            }
          }
          const double var_l = sll - sl * sl / n;
          const double var_r = srr - sr * sr / n;
          float c = 1.0f;
          if (var_l > kFlatBlockThreshold && var_r > kFlatBlockThreshold) {
            const double ncc = std::clamp((slr - sl * sr / n) / std::sqrt(var_l * var_r), -1.0, 1.0);
            c = static_cast<float>((1.0 - ncc) * 0.5);
          }
          vol.set(u, v, d, c);
        }
      }
    }
  });
  return vol;
}

CostVolume cost_volume_cosine(const FeatureMap& left, const FeatureMap& right, int d_max,
                              const std::vector<std::uint8_t>& right_valid) {
  if (left.width != right.width || left.height != right.height ||
      left.channels != right.channels) {
    throw Error(ErrorCode::DimensionMismatch, "feature maps differ in shape");
  }
  const int W = left.width;
  const int H = left.height;
  const int C = left.channels;
  CostVolume vol(W, H, d_max);

  // Norms are computed once per pixel.
  auto norms = [&](const FeatureMap& f) {
    std::vector<double> out(static_cast<std::size_t>(W) * H);
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        const float* x = f.at(u, v);
        double s = 0;
        for (int c = 0; c < C; ++c) s += static_cast<double>(x[c]) * x[c];
        out[static_cast<std::size_t>(v) * W + u] = std::sqrt(s);
      }
    }
    return out;
  };
  const auto norm_l = norms(left);
  const auto norm_r = norms(right);

  parallel_rows(0, H, [&](int v0, int v1) {
    for (int v = v0; v < v1; ++v) {
      for (int u = 0; u < W; ++u) {
        const float* fl = left.at(u, v);
        const double nl = norm_l[static_cast<std::size_t>(v) * W + u];
        for (int d = 0; d <= d_max; ++d) {
          const int ur = u - d;
          if (ur < 0 || !right_pixel_ok(right_valid, W, ur, v)) continue;
          const double nr = norm_r[static_cast<std::size_t>(v) * W + ur];
          float c = 1.0f;
          if (nl > 0.0 && nr > 0.0) {
            const float* fr = right.at(ur, v);
            double dot = 0;
            for (int ch = 0; ch < C; ++ch) dot += static_cast<double>(fl[ch]) * fr[ch];
            const double cosine = std::clamp(dot / (nl * nr), -1.0, 1.0);
            c = static_cast<float>((1.0 - cosine) * 0.5);
          }
          vol.set(u, v, d, c);
        }
      }
    }
  });
  return vol;
}

CostVolume right_reference(const CostVolume& left_ref) {
  const int W = left_ref.width();
  const int H = left_ref.height();
  CostVolume out(W, H, left_ref.d_max(), left_ref.level());
  parallel_rows(0, H, [&](int v0, int v1) {
    for (int v = v0; v < v1; ++v) {
      for (int u = 0; u < W; ++u) {
        for (int d = 0; d <= left_ref.d_max(); ++d) {
          const int ul = u + d;
          if (ul >= W || left_ref.is_sentinel(ul, v, d)) continue;
          out.set(u, v, d, left_ref.cost(ul, v, d));
        }
      }
    }
  });
  return out;
}

int level_d_max(int d_max_full, int level) { return ceil_div_pow2(d_max_full, level - 1); }

std::vector<CostVolumePair> build_cost_pyramid(const ImagePyramid& left,
                                               const ImagePyramid& right,
                                               const PipelineConfig& config) {
  if (left.depth() != right.depth() || left.depth() < config.k) {
    throw Error(ErrorCode::DimensionMismatch, "image pyramids do not match configured depth");
  }
  std::vector<CostVolumePair> out;
  for (int i = 1; i <= config.k; ++i) {
    CostVolume cl = cost_volume_ncc(left.level(i), right.level(i),
                                    level_d_max(config.d_max_full, i),
                                    config.cost_mode.block_radius);
    cl.set_level(i);
    CostVolume cr = right_reference(cl);
    out.push_back({std::move(cl), std::move(cr)});
  }
  return out;
}

std::vector<CostVolumePair> build_cost_pyramid(const FeaturePyramid& left,
                                               const FeaturePyramid& right,
                                               const PipelineConfig& config) {
  if (left.depth() != right.depth() || left.depth() < config.k) {
    throw Error(ErrorCode::DimensionMismatch, "feature pyramids do not match configured depth");
  }
  std::vector<CostVolumePair> out;
  for (int i = 1; i <= config.k; ++i) {
    const auto idx = static_cast<std::size_t>(i - 1);
    CostVolume cl = cost_volume_cosine(left.levels[idx], right.levels[idx],
                                       level_d_max(config.d_max_full, i));
    cl.set_level(i);
    CostVolume cr = right_reference(cl);
    out.push_back({std::move(cl), std::move(cr)});
  }
  return out;
}

}  // namespace d3stereo
