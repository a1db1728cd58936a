#include "d3stereo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace d3stereo {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

float quantize(double x) { return static_cast<float>(std::clamp(std::round(x), 0.0, 255.0)); }

constexpr float kNaN = std::numeric_limits<float>::quiet_NaN();

}  // namespace

Texture::Texture(std::uint64_t seed, int min_period, int octaves)
    : seed_(seed), min_period_(min_period), octaves_(octaves) {}

double Texture::lattice(int octave, int ix, int iy) const {
  std::uint64_t h = splitmix(seed_ ^ (static_cast<std::uint64_t>(octave) << 56));
  h = splitmix(h ^ static_cast<std::uint32_t>(ix));
  h = splitmix(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(iy)) << 32));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double Texture::operator()(double x, double y) const {
  double sum = 0.0;
  for (int o = 0; o < octaves_; ++o) {
    const double period = min_period_ * std::ldexp(1.0, o);
    const double fx = x / period;
    const double fy = y / period;
    const double x0 = std::floor(fx);
    const double y0 = std::floor(fy);
    const int ix = static_cast<int>(x0);
    const int iy = static_cast<int>(y0);
    const double tx = fade(fx - x0);
    const double ty = fade(fy - y0);
    const double top = lattice(o, ix, iy) * (1 - tx) + lattice(o, ix + 1, iy) * tx;
    const double bottom = lattice(o, ix, iy + 1) * (1 - tx) + lattice(o, ix + 1, iy + 1) * tx;
    sum += top * (1 - ty) + bottom * ty;
  }
  const double mean = sum / octaves_;
  return std::clamp(127.5 + (mean - 0.5) * 510.0, 0.0, 255.0);
}

SyntheticScene road_scene(int width, int height, const RoadDisparityModel& model,
                          std::uint64_t seed) {
  const Texture texture(seed);
  SyntheticScene s{GrayImage(width, height), GrayImage(width, height),
                   GrayImage(width, height, kNaN)};
  for (int v = 0; v < height; ++v) {
    const double d = model.at(v);
    for (int u = 0; u < width; ++u) {
      s.left(u, v) = quantize(texture(u, v));
      s.right(u, v) = quantize(texture(u + d, v));
      if (u - d >= 0.0) s.ground_truth(u, v) = static_cast<float>(d);
    }
  }
  return s;
}

SyntheticScene two_plane_scene(int width, int height, int background_d, int foreground_d,
                               int band_begin, int band_end, std::uint64_t seed) {
  const Texture background(seed);
  const Texture foreground(splitmix(seed));
  SyntheticScene s{GrayImage(width, height), GrayImage(width, height),
                   GrayImage(width, height, kNaN)};
  const auto in_band = [&](int u) { return u >= band_begin && u < band_end; };
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      s.left(u, v) = quantize(in_band(u) ? foreground(u, v) : background(u, v));
      // The foreground band occupies [band_begin - fg, band_end - fg) in the
      // right view and hides the background there.
      const int fg_source = u + foreground_d;
      s.right(u, v) = quantize(in_band(fg_source) ? foreground(fg_source, v)
                                                  : background(u + background_d, v));
      const int d = in_band(u) ? foreground_d : background_d;
      const int x = u - d;
      if (x < 0) continue;
      if (!in_band(u) && in_band(x + foreground_d)) continue;
      s.ground_truth(u, v) = static_cast<float>(d);
    }
  }
  return s;
}

DisparityMap planted_field(int width, int height, int d_max, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> slope(-0.12, 0.12);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double a = slope(rng);
  const double b = slope(rng);
  const double ph = phase(rng);
  const double amplitude = 3.0;
  const double wavelength = 48.0;
  const double center = d_max / 2.0;
  DisparityMap map(width, height);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const double x = center + a * (u - width / 2.0) + b * (v - height / 2.0) +
                       amplitude * std::sin(2.0 * std::numbers::pi * (u + v) / wavelength + ph);
      const double hi = std::min(d_max, u);
      const int d = static_cast<int>(std::lround(std::clamp(x, 0.0, hi)));
      map(u, v) = DisparityState::decisive(d);
    }
  }
  return map;
}

CostVolume planted_volume(const DisparityMap& truth, int d_max, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> high(0.3f, 1.0f);
  std::uniform_real_distribution<float> low(0.0f, 0.02f);
  CostVolume volume(truth.width(), truth.height(), d_max);
  for (int v = 0; v < truth.height(); ++v) {
    for (int u = 0; u < truth.width(); ++u) {
      const DisparityState s = truth(u, v);
      for (int d = 0; d <= d_max; ++d) {
        const float c = (s.is_decisive() && s.disparity() == d) ? low(rng) : high(rng);
        if (u - d < 0) {
          volume.set_sentinel(u, v, d);
        } else {
          volume.set(u, v, d, c);
        }
      }
    }
  }
  return volume;
}

}  // namespace d3stereo
