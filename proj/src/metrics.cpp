#include "d3stereo/metrics.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "d3stereo/parallel.hpp"

namespace d3stereo {
namespace {

bool est_valid(float x) { return std::isfinite(x) && x >= 0.0f; }
bool gt_valid(float x) { return std::isfinite(x); }

void check_same_size(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::DimensionMismatch, "rasters differ in size");
  }
}

void check_mask(const GrayImage& a, const Mask& mask) {
  if (!mask.empty() && mask.size() != a.data().size()) {
    throw Error(ErrorCode::DimensionMismatch, "mask size differs from image");
  }
}

struct Partial {
  double sum = 0.0;
  std::uint64_t count = 0;
};

// Per-row partial sums combined in row order, so the total does not depend on
// the worker count.
template <class RowFn>
Partial reduce_rows(int height, RowFn&& row_fn) {
  std::vector<Partial> rows(static_cast<std::size_t>(height));
  parallel_rows(0, height, [&](int v0, int v1) {
    for (int v = v0; v < v1; ++v) rows[static_cast<std::size_t>(v)] = row_fn(v);
  });
  Partial total;
  for (const auto& r : rows) {
    total.sum += r.sum;
    total.count += r.count;
  }
  return total;
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << x;
  return os.str();
}

std::string format_delta(double delta) {
  std::ostringstream os;
  os << delta;
  return os.str();
}

}  // namespace

double epe(const GrayImage& est, const GrayImage& gt) {
  check_same_size(est, gt);
  const Partial p = reduce_rows(est.height(), [&](int v) {
    Partial r;
    for (int u = 0; u < est.width(); ++u) {
      if (!est_valid(est(u, v)) || !gt_valid(gt(u, v))) continue;
      r.sum += std::fabs(static_cast<double>(est(u, v)) - gt(u, v));
      ++r.count;
    }
    return r;
  });
  if (p.count == 0) throw Error(ErrorCode::NoValidPixels, "no pixel valid in both maps");
  return p.sum / static_cast<double>(p.count);
}

double pep(const GrayImage& est, const GrayImage& gt, double delta) {
  check_same_size(est, gt);
  const Partial p = reduce_rows(est.height(), [&](int v) {
    Partial r;
    for (int u = 0; u < est.width(); ++u) {
      if (!est_valid(est(u, v)) || !gt_valid(gt(u, v))) continue;
      if (std::fabs(static_cast<double>(est(u, v)) - gt(u, v)) > delta) r.sum += 1.0;
      ++r.count;
    }
    return r;
  });
  if (p.count == 0) throw Error(ErrorCode::NoValidPixels, "no pixel valid in both maps");
  return 100.0 * p.sum / static_cast<double>(p.count);
}

double valid_fraction(const GrayImage& est, const GrayImage& gt) {
  check_same_size(est, gt);
  std::uint64_t gt_count = 0;
  std::uint64_t both = 0;
  for (std::size_t i = 0; i < gt.data().size(); ++i) {
    if (!gt_valid(gt.data()[i])) continue;
    ++gt_count;
    both += est_valid(est.data()[i]) ? 1 : 0;
  }
  return gt_count == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(gt_count);
}

WarpResult warp_right_to_left(const GrayImage& right, const GrayImage& est) {
  check_same_size(right, est);
  const int W = right.width();
  WarpResult out{GrayImage(W, right.height()), Mask(right.data().size(), 0)};
  for (int v = 0; v < right.height(); ++v) {
    for (int u = 0; u < W; ++u) {
      const float d = est(u, v);
      if (!est_valid(d)) continue;
      const double x = static_cast<double>(u) - d;
      const double x0 = std::floor(x);
      const double frac = x - x0;
      const int i0 = static_cast<int>(x0);
      if (i0 < 0 || i0 >= W) continue;
      float value = right(i0, v);
      if (frac > 0.0) {
        if (i0 + 1 >= W) continue;
        value = static_cast<float>((1.0 - frac) * right(i0, v) + frac * right(i0 + 1, v));
      }
      out.image(u, v) = value;
      out.mask[static_cast<std::size_t>(v) * W + u] = 1;
    }
  }
  return out;
}

PsnrMse psnr_mse(const GrayImage& a, const GrayImage& b, const Mask& mask) {
  check_same_size(a, b);
  check_mask(a, mask);
  const Partial p = reduce_rows(a.height(), [&](int v) {
    Partial r;
    for (int u = 0; u < a.width(); ++u) {
      if (!mask.empty() && !mask[static_cast<std::size_t>(v) * a.width() + u]) continue;
      const double diff = static_cast<double>(a(u, v)) - b(u, v);
      r.sum += diff * diff;
      ++r.count;
    }
    return r;
  });
  if (p.count == 0) throw Error(ErrorCode::NoValidPixels, "empty mask");
  PsnrMse out;
  out.mse = p.sum / static_cast<double>(p.count);
  out.psnr = out.mse > 0.0 ? 10.0 * std::log10(255.0 * 255.0 / out.mse) : kPsnrIdentical;
  return out;
}

double ssim(const GrayImage& a, const GrayImage& b, const Mask& mask) {
  check_same_size(a, b);
  check_mask(a, mask);
  constexpr int kWin = 11;
  constexpr int kHalf = kWin / 2;
  constexpr double kSigma = 1.5;
  constexpr double C1 = (0.01 * 255) * (0.01 * 255);
  constexpr double C2 = (0.03 * 255) * (0.03 * 255);
  const int W = a.width();
  const int H = a.height();
  if (W < kWin || H < kWin) throw Error(ErrorCode::ImageTooSmall, "SSIM needs at least 11x11");

  std::array<double, kWin> g{};
  double gsum = 0.0;
  for (int k = 0; k < kWin; ++k) {
    const double x = k - kHalf;
    g[k] = std::exp(-x * x / (2.0 * kSigma * kSigma));
    gsum += g[k];
  }
  for (auto& x : g) x /= gsum;

  // Integral image of the mask to find fully covered windows.
  std::vector<std::uint32_t> integral(static_cast<std::size_t>(W + 1) * (H + 1), 0);
  for (int v = 0; v < H; ++v) {
    for (int u = 0; u < W; ++u) {
      const std::uint32_t m =
          mask.empty() ? 1u : (mask[static_cast<std::size_t>(v) * W + u] ? 1u : 0u);
      integral[static_cast<std::size_t>(v + 1) * (W + 1) + u + 1] =
          m + integral[static_cast<std::size_t>(v) * (W + 1) + u + 1] +
          integral[static_cast<std::size_t>(v + 1) * (W + 1) + u] -
          integral[static_cast<std::size_t>(v) * (W + 1) + u];
    }
  }
  auto covered = [&](int cu, int cv) {
    const int u0 = cu - kHalf, v0 = cv - kHalf, u1 = cu + kHalf + 1, v1 = cv + kHalf + 1;
    const auto at = [&](int u, int v) { return integral[static_cast<std::size_t>(v) * (W + 1) + u]; };
    return at(u1, v1) - at(u0, v1) - at(u1, v0) + at(u0, v0) == kWin * kWin;
  };

  // Horizontal pass of the five moments at every window-center column.
  const int cw = W - 2 * kHalf;
  std::vector<std::array<double, 5>> horiz(static_cast<std::size_t>(cw) * H);
  parallel_rows(0, H, [&](int v0, int v1) {
    for (int v = v0; v < v1; ++v) {
      for (int c = 0; c < cw; ++c) {
        std::array<double, 5> m{};
        for (int k = 0; k < kWin; ++k) {
          const double x = a(c + k, v);
          const double y = b(c + k, v);
          m[0] += g[k] * x;
          m[1] += g[k] * y;
          m[2] += g[k] * (x * x);
          m[3] += g[k] * (y * y);
          m[4] += g[k] * (x * y);
        }
        horiz[static_cast<std::size_t>(v) * cw + c] = m;
      }
    }
  });

  const int ch = H - 2 * kHalf;
  const Partial p = reduce_rows(ch, [&](int r) {
    Partial out;
    for (int c = 0; c < cw; ++c) {
      if (!covered(c + kHalf, r + kHalf)) continue;
      std::array<double, 5> m{};
      for (int k = 0; k < kWin; ++k) {
        const auto& h = horiz[static_cast<std::size_t>(r + k) * cw + c];
        for (int j = 0; j < 5; ++j) m[j] += g[k] * h[j];
      }
      const double mu_a = m[0], mu_b = m[1];
      const double var_a = m[2] - mu_a * mu_a;
      const double var_b = m[3] - mu_b * mu_b;
      const double cov = m[4] - mu_a * mu_b;
      out.sum += ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)) /
                 ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2));
      ++out.count;
    }
    return out;
  });
  if (p.count == 0) throw Error(ErrorCode::NoValidWindows, "no 11x11 window inside the mask");
  return p.sum / static_cast<double>(p.count);
}

GrayImage refine_subpixel(const DisparityMap& map, const CostVolume& volume,
                          const std::vector<int>& shift) {
  if (map.width() != volume.width() || map.height() != volume.height()) {
    throw Error(ErrorCode::DimensionMismatch, "map and volume differ in size");
  }
  if (!shift.empty() && static_cast<int>(shift.size()) != map.height()) {
    throw Error(ErrorCode::DimensionMismatch, "shift table length != map height");
  }
  GrayImage out(map.width(), map.height(), std::numeric_limits<float>::quiet_NaN());
  for (int v = 0; v < map.height(); ++v) {
    const double s = shift.empty() ? 0.0 : shift[static_cast<std::size_t>(v)];
    for (int u = 0; u < map.width(); ++u) {
      const DisparityState st = map(u, v);
      if (!st.is_decisive()) continue;
      const int d = st.disparity();
      double refined = d;
      if (d >= 1 && d + 1 <= volume.d_max() && d <= volume.d_max() &&
          !volume.is_sentinel(u, v, d - 1) && !volume.is_sentinel(u, v, d) &&
          !volume.is_sentinel(u, v, d + 1)) {
        const double cm = volume.cost(u, v, d - 1);
        const double c0 = volume.cost(u, v, d);
        const double cp = volume.cost(u, v, d + 1);
        const double denom = 2.0 * (cm - 2.0 * c0 + cp);
        if (denom > 0.0) refined = d + (cm - cp) / denom;
      }
      const double total = refined + s;
      if (total >= 0.0) out(u, v) = static_cast<float>(total);
    }
  }
  return out;
}

std::string MetricReport::to_text() const {
  std::ostringstream os;
  if (epe) os << "epe=" << format_double(*epe) << '\n';
  for (const auto& [delta, value] : pep) {
    os << "pep@" << format_delta(delta) << '=' << format_double(value) << '\n';
  }
  if (psnr) os << "psnr=" << format_double(*psnr) << '\n';
  if (mse) os << "mse=" << format_double(*mse) << '\n';
  if (ssim) os << "ssim=" << format_double(*ssim) << '\n';
  os << "valid_fraction=" << format_double(valid_fraction) << '\n';
  return os.str();
}

std::string MetricReport::to_ledger_row(const std::string& dataset, const std::string& pair,
                                        const std::string& config_hash) const {
  std::ostringstream os;
  os << dataset << '\t' << pair << '\t' << config_hash;
  std::istringstream lines(to_text());
  for (std::string line; std::getline(lines, line);) os << '\t' << line;
  return os.str();
}

MetricReport evaluate_disparity(const GrayImage& est, const GrayImage& gt,
                                const std::vector<double>& deltas) {
  MetricReport r;
  r.epe = epe(est, gt);
  for (const double delta : deltas) r.pep[delta] = pep(est, gt, delta);
  r.valid_fraction = valid_fraction(est, gt);
  return r;
}

MetricReport evaluate_reconstruction(const GrayImage& left, const GrayImage& right,
                                     const GrayImage& est) {
  const WarpResult warped = warp_right_to_left(right, est);
  MetricReport r;
  const PsnrMse pm = psnr_mse(left, warped.image, warped.mask);
  r.psnr = pm.psnr;
  r.mse = pm.mse;
  r.ssim = ssim(left, warped.image, warped.mask);
  std::size_t valid = 0;
  for (const auto m : warped.mask) valid += m;
  r.valid_fraction = static_cast<double>(valid) / static_cast<double>(warped.mask.size());
  return r;
}

void append_ledger_row(const std::filesystem::path& ledger, const std::string& row) {
  std::ofstream out(ledger, std::ios::app);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot append to " + ledger.string());
  out << row << '\n';
}

}  // namespace d3stereo
