#include "d3stereo/perspective.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace d3stereo {
namespace {

struct LineFit {
  double alpha0;
  double alpha1;
};

LineFit least_squares(std::span<const RoadSample> samples, const std::vector<bool>& use) {
  double n = 0, sv = 0, sd = 0, svv = 0, svd = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!use[i]) continue;
    const auto& s = samples[i];
    n += 1;
    sv += s.v;
    sd += s.d;
    svv += s.v * s.v;
    svd += s.v * s.d;
  }
  // Centered form keeps the normal equations well conditioned.
  const double mv = sv / n;
  const double md = sd / n;
  const double var = svv - n * mv * mv;
  const double cov = svd - n * mv * md;
  const double alpha1 = cov / var;
  return {md - alpha1 * mv, alpha1};
}

void check_rows(std::span<const RoadSample> samples, const std::vector<bool>& use) {
  std::set<double> rows;
  std::size_t count = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!use[i]) continue;
    rows.insert(samples[i].v);
    ++count;
    if (rows.size() > 2) return;
  }
  if (count < kMinRoadSamples) {
    throw Error(ErrorCode::InsufficientSeeds,
                std::to_string(count) + " road samples, need " + std::to_string(kMinRoadSamples));
  }
  throw Error(ErrorCode::DegenerateFit, "road samples span <= 2 rows");
}

}  // namespace

RoadDisparityModel RoadDisparityModel::at_level(int level) const {
  const double scale = std::ldexp(1.0, level - 1);
  // d_l(v_l) = model(v_l * scale) / scale
  return {alpha0 / scale, alpha1, inlier_fraction};
}

RoadDisparityModel fit_road_model(std::span<const RoadSample> samples) {
  if (samples.size() < kMinRoadSamples) {
    throw Error(ErrorCode::InsufficientSeeds,
                std::to_string(samples.size()) + " road samples, need " +
                    std::to_string(kMinRoadSamples));
  }
  std::vector<bool> use(samples.size(), true);
  check_rows(samples, use);
  const LineFit first = least_squares(samples, use);

  std::size_t inliers = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double r = samples[i].d - (first.alpha0 + first.alpha1 * samples[i].v);
    use[i] = std::fabs(r) <= kRoadOutlierResidual;
    inliers += use[i] ? 1 : 0;
  }
  check_rows(samples, use);
  const LineFit refit = least_squares(samples, use);
  return {refit.alpha0, refit.alpha1,
          static_cast<double>(inliers) / static_cast<double>(samples.size())};
}

RoadDisparityModel fit_road_model(const DisparityMap& dense_k) {
  if (density(dense_k) < 0.2) {
    throw Error(ErrorCode::InsufficientSeeds, "coarse map density below 0.2");
  }
  const double scale = std::ldexp(1.0, dense_k.level() - 1);
  std::vector<RoadSample> samples;
  samples.reserve(dense_k.decisive_count());
  for (int v = 0; v < dense_k.height(); ++v) {
    for (int u = 0; u < dense_k.width(); ++u) {
      const DisparityState s = dense_k(u, v);
      if (s.is_decisive()) samples.push_back({v * scale, s.disparity() * scale});
    }
  }
  return fit_road_model(samples);
}

std::vector<int> row_shifts(const RoadDisparityModel& model, int height, int offset) {
  std::vector<int> shift(static_cast<std::size_t>(height));
  for (int v = 0; v < height; ++v) {
    shift[static_cast<std::size_t>(v)] = static_cast<int>(std::lround(model.at(v))) - offset;
  }
  return shift;
}

PerspectiveResult shift_rows(const GrayImage& image, std::span<const int> shift) {
  const int W = image.width();
  const int H = image.height();
  if (static_cast<int>(shift.size()) != H) {
    throw Error(ErrorCode::DimensionMismatch, "shift table length != image height");
  }
  PerspectiveResult out{GrayImage(W, H), std::vector<int>(shift.begin(), shift.end()),
                        std::vector<std::uint8_t>(static_cast<std::size_t>(W) * H, 0)};
  for (int v = 0; v < H; ++v) {
    const int s = shift[static_cast<std::size_t>(v)];
    for (int x = 0; x < W; ++x) {
      const int src = x - s;
      if (src < 0 || src >= W) continue;
      out.image(x, v) = image(src, v);
      out.valid[static_cast<std::size_t>(v) * W + x] = 1;
    }
  }
  return out;
}

PerspectiveResult apply_pt(const GrayImage& right, const RoadDisparityModel& model, int offset) {
  const auto shift = row_shifts(model, right.height(), offset);
  return shift_rows(right, shift);
}

FeatureMap shift_rows(const FeatureMap& features, std::span<const int> shift,
                      std::vector<std::uint8_t>* valid) {
  if (static_cast<int>(shift.size()) != features.height) {
    throw Error(ErrorCode::DimensionMismatch, "shift table length != feature map height");
  }
  FeatureMap out{features.height, features.width, features.channels,
                 std::vector<float>(features.data.size(), 0.0f)};
  if (valid) valid->assign(static_cast<std::size_t>(features.width) * features.height, 0);
  for (int v = 0; v < features.height; ++v) {
    const int s = shift[static_cast<std::size_t>(v)];
    for (int x = 0; x < features.width; ++x) {
      const int src = x - s;
      if (src < 0 || src >= features.width) continue;
      std::copy_n(features.at(src, v), features.channels, out.at(x, v));
      if (valid) (*valid)[static_cast<std::size_t>(v) * features.width + x] = 1;
    }
  }
  return out;
}

DisparityMap recompose(const DisparityMap& residual, std::span<const int> shift) {
  if (static_cast<int>(shift.size()) != residual.height()) {
    throw Error(ErrorCode::DimensionMismatch, "shift table length != map height");
  }
  DisparityMap out = residual;
  for (int v = 0; v < out.height(); ++v) {
    for (int u = 0; u < out.width(); ++u) {
      const DisparityState s = residual(u, v);
      if (!s.is_decisive()) continue;
      const int d = s.disparity() + shift[static_cast<std::size_t>(v)];
      out(u, v) = d >= 0 ? DisparityState::decisive(d) : DisparityState::unknown();
    }
  }
  return out;
}

DisparityMap to_residual(const DisparityMap& absolute, std::span<const int> shift, int d_max) {
  if (static_cast<int>(shift.size()) != absolute.height()) {
    throw Error(ErrorCode::DimensionMismatch, "shift table length != map height");
  }
  DisparityMap out = absolute;
  for (int v = 0; v < out.height(); ++v) {
    for (int u = 0; u < out.width(); ++u) {
      const DisparityState s = absolute(u, v);
      if (!s.is_decisive()) continue;
      const int d = s.disparity() - shift[static_cast<std::size_t>(v)];
      out(u, v) = (d >= 0 && d <= d_max) ? DisparityState::decisive(d) : DisparityState::unknown();
    }
  }
  return out;
}

}  // namespace d3stereo
