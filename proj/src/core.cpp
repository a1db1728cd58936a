#include "d3stereo/core.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace d3stereo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::UnexpectedEof: return "UnexpectedEof";
    case ErrorCode::TrailingData: return "TrailingData";
    case ErrorCode::ColorPfmUnsupported: return "ColorPfmUnsupported";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::NonHalvingResolution: return "NonHalvingResolution";
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooSmallForDepth: return "TooSmallForDepth";
    case ErrorCode::InsufficientCandidates: return "InsufficientCandidates";
    case ErrorCode::DiffusionDiverged: return "DiffusionDiverged";
    case ErrorCode::PatchOutOfBounds: return "PatchOutOfBounds";
    case ErrorCode::InsufficientSeeds: return "InsufficientSeeds";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::NoValidPixels: return "NoValidPixels";
    case ErrorCode::NoValidWindows: return "NoValidWindows";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

GrayImage::GrayImage(int width, int height, float fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::MalformedInput, "negative image dimensions");
  }
}

GrayImage::GrayImage(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0 ||
      data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::DimensionMismatch, "image data length != width * height");
  }
}

GrayImage ColorImage::luminance() const {
  GrayImage out(width, height);
  auto& data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float r = rgb[3 * i];
    const float g = rgb[3 * i + 1];
    const float b = rgb[3 * i + 2];
    data[i] = 0.299f * r + 0.587f * g + 0.114f * b;
  }
  return out;
}

CostVolume::CostVolume(int width, int height, int d_max, int level)
    : width_(width), height_(height), d_max_(d_max), level_(level) {
  if (width <= 0 || height <= 0 || d_max < 0) {
    throw Error(ErrorCode::MalformedInput, "cost volume needs positive size and d_max >= 0");
  }
  const std::size_t n = static_cast<std::size_t>(width) * height * (d_max + 1);
  costs_.assign(n, kSentinelCost);
  sentinel_.assign(n, 1);
}

DisparityState DisparityState::decisive(int d) {
  if (d < 0) throw Error(ErrorCode::MalformedInput, "decisive disparity must be >= 0");
  return DisparityState(d);
}

DisparityMap::DisparityMap(int width, int height, int level, DisparityState fill)
    : width_(width), height_(height), level_(level),
      states_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

std::size_t DisparityMap::decisive_count() const noexcept {
  std::size_t n = 0;
  for (const auto s : states_) n += s.is_decisive() ? 1 : 0;
  return n;
}

GrayImage DisparityMap::to_raster() const {
  GrayImage out(width_, height_);
  auto& data = out.data();
  for (std::size_t i = 0; i < states_.size(); ++i) {
    const auto s = states_[i];
    if (s.is_decisive()) {
      data[i] = static_cast<float>(s.disparity());
    } else if (s.is_invalid()) {
      data[i] = -1.0f;
    } else {
      data[i] = std::numeric_limits<float>::quiet_NaN();
    }
  }
  return out;
}

DisparityMap DisparityMap::from_raster(const GrayImage& raster, int level) {
  DisparityMap out(raster.width(), raster.height(), level);
  const auto& data = raster.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const float x = data[i];
    if (std::isnan(x)) {
      out.states_[i] = DisparityState::unknown();
    } else if (std::isinf(x) || x < 0.0f) {
      out.states_[i] = DisparityState::invalid();
    } else {
      out.states_[i] = DisparityState::decisive(static_cast<int>(std::lround(x)));
    }
  }
  return out;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (k < 2) fail("k must be >= 2");
  if (d_max_full < 1) fail("d_max_full must be >= 1");
  if (tau < 1) fail("tau must be >= 1");
  if (kappa_d < 1) fail("kappa_d must be >= 1");
  if (kappa_a < 1) fail("kappa_a must be >= 1");
  if (t_max < 1) fail("t_max must be >= 1");
  if (!(sigma1 > 0.0)) fail("sigma1 must be > 0");
  if (!(sigma2 > 0.0)) fail("sigma2 must be > 0");
  if (!(gamma > 1.0)) fail("gamma must be > 1");
  if (lrdc_tol < 0) fail("lrdc_tol must be >= 0");
  if (cost_mode.kind == CostMode::Kind::Ncc && cost_mode.block_radius < 1) {
    fail("block_radius must be >= 1");
  }
  if (pt_offset < 1) fail("pt_offset must be >= 1");
  if (min_coarse_side < 1) fail("min_coarse_side must be >= 1");
}

std::string PipelineConfig::canonical_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "k=" << k << ";d_max_full=" << d_max_full << ";tau=" << tau << ";kappa_d=" << kappa_d
     << ";kappa_a=" << kappa_a << ";t_max=" << t_max << ";sigma1=" << sigma1
     << ";sigma2=" << sigma2 << ";gamma=" << gamma << ";lrdc_tol=" << lrdc_tol << ";cost_mode="
     << (cost_mode.kind == CostMode::Kind::Ncc ? "ncc" : "cosine")
     << ";block_radius=" << cost_mode.block_radius << ";use_pt=" << (use_pt ? 1 : 0)
     << ";pt_offset=" << pt_offset
     << ";prc_mean=" << (prc_mean == PrcMean::Union ? "union" : "per-set")
     << ";min_coarse_side=" << min_coarse_side;
  return os.str();
}

std::string PipelineConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : canonical_string()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Pixel> neighborhood(Pixel p, int radius, int width, int height) {
  std::vector<Pixel> out;
  out.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1) - 1));
  for (int dv = -radius; dv <= radius; ++dv) {
    const int v = p.v + dv;
    if (v < 0 || v >= height) continue;
    for (int du = -radius; du <= radius; ++du) {
      const int u = p.u + du;
      if ((du == 0 && dv == 0) || u < 0 || u >= width) continue;
      out.push_back({u, v});
    }
  }
  return out;
}

double density(const DisparityMap& map) {
  const std::size_t total = map.states().size();
  if (total == 0) return 0.0;
  return static_cast<double>(map.decisive_count()) / static_cast<double>(total);
}

int ceil_div_pow2(int value, int exponent) {
  const int denom = 1 << exponent;
  return (value + denom - 1) / denom;
}

}  // namespace d3stereo
