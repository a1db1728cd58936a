#include "d3stereo/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace d3stereo::io {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint32_t byteswap32(std::uint32_t x) {
  return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
}

float load_f32(const std::uint8_t* p, bool little) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if ((std::endian::native == std::endian::little) != little) bits = byteswap32(bits);
  return std::bit_cast<float>(bits);
}

void store_f32(std::uint8_t* p, float x, bool little) {
  auto bits = std::bit_cast<std::uint32_t>(x);
  if ((std::endian::native == std::endian::little) != little) bits = byteswap32(bits);
  std::memcpy(p, &bits, 4);
}

std::uint32_t load_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_u32le(Bytes& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((x >> (8 * i)) & 0xffu));
}

void append_f32le(Bytes& out, float x) {
  const std::size_t at = out.size();
  out.resize(at + 4);
  store_f32(out.data() + at, x, true);
}

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\v' || c == '\f';
}

// Minimal cursor over a header made of whitespace-separated ASCII tokens.
class HeaderReader {
 public:
  HeaderReader(const Bytes& bytes, std::size_t pos, bool allow_comments)
      : bytes_(bytes), pos_(pos), comments_(allow_comments) {}

  std::string token() {
    skip_space();
    std::string out;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) throw Error(ErrorCode::MalformedHeader, "truncated header");
    return out;
  }

  // Exactly one whitespace byte separates the header from the payload.
  std::size_t payload_start() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw Error(ErrorCode::MalformedHeader, "missing separator before payload");
    }
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (comments_ && bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const Bytes& bytes_;
  std::size_t pos_;
  bool comments_;
};

int parse_positive_int(const std::string& s, const char* what) {
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(s, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedHeader, std::string("bad ") + what + " '" + s + "'");
  }
  if (used != s.size() || value <= 0 || value > (1 << 24)) {
    throw Error(ErrorCode::MalformedHeader, std::string("bad ") + what + " '" + s + "'");
  }
  return static_cast<int>(value);
}

void check_payload_size(std::size_t available, std::size_t needed, const char* what) {
  if (available < needed) {
    throw Error(ErrorCode::UnexpectedEof, std::string(what) + " payload truncated");
  }
  if (available > needed) {
    throw Error(ErrorCode::TrailingData,
                std::string(what) + " has " + std::to_string(available - needed) +
                    " trailing bytes");
  }
}

std::uint8_t to_byte(float x) {
  if (!(x == x)) return 0;
  return static_cast<std::uint8_t>(std::clamp(std::lround(x), 0L, 255L));
}

ColorImage decode_pnm(const Bytes& bytes) {
  const bool color = bytes[1] == '6';
  HeaderReader hdr(bytes, 2, true);
  const int w = parse_positive_int(hdr.token(), "width");
  const int h = parse_positive_int(hdr.token(), "height");
  const int maxval = parse_positive_int(hdr.token(), "maxval");
  if (maxval > 255) throw Error(ErrorCode::UnsupportedFormat, "16-bit PNM is not supported");
  const std::size_t start = hdr.payload_start();
  const std::size_t channels = color ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(w) * h * channels;
  check_payload_size(bytes.size() - std::min(start, bytes.size()), n, "PNM");

  ColorImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
  for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const unsigned raw = bytes[start + i * channels + (color ? c : 0)];
      img.rgb[i * 3 + c] =
          maxval == 255 ? static_cast<std::uint8_t>(raw)
                        : static_cast<std::uint8_t>((raw * 255u + maxval / 2) / maxval);
    }
  }
  return img;
}

bool is_gray_pnm(const Bytes& bytes) { return bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5'; }

ColorImage decode_png(const Bytes& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::DecodeError, image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, "16-bit PNG is not supported");
  }
  image.format = PNG_FORMAT_RGB;
  ColorImage out{static_cast<int>(image.width), static_cast<int>(image.height), {}};
  out.rgb.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::DecodeError, msg);
  }
  return out;
}

GrayImage decode_png_gray(const Bytes& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::DecodeError, image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw Error(ErrorCode::UnsupportedFormat, "16-bit PNG is not supported");
  }
  if (image.format & PNG_FORMAT_FLAG_COLOR) {
    png_image_free(&image);
    return decode_png(bytes).luminance();
  }
  // Gray sources are read without libpng's own color conversion so values
  // stay exact.
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::DecodeError, msg);
  }
  GrayImage out(static_cast<int>(image.width), static_cast<int>(image.height));
  std::transform(buf.begin(), buf.end(), out.data().begin(),
                 [](std::uint8_t b) { return static_cast<float>(b); });
  return out;
}

bool is_png(const Bytes& bytes) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::equal(sig, sig + 8, bytes.begin());
}

bool is_pnm(const Bytes& bytes) {
  return bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6');
}

void write_png_buffer(const std::uint8_t* data, int w, int h, bool color,
                      const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, data, 0, nullptr)) {
    throw Error(ErrorCode::IoFailure, "cannot write " + path.string() + ": " + image.message);
  }
}

}  // namespace

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

PfmImage parse_pfm(const Bytes& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw Error(ErrorCode::MalformedHeader, "not a PFM file");
  if (bytes[1] == 'F') throw Error(ErrorCode::ColorPfmUnsupported, "3-channel PFM");
  if (bytes[1] != 'f') throw Error(ErrorCode::MalformedHeader, "not a PFM file");

  HeaderReader hdr(bytes, 2, false);
  const int w = parse_positive_int(hdr.token(), "width");
  const int h = parse_positive_int(hdr.token(), "height");
  const std::string scale_tok = hdr.token();
  float scale = 0.0f;
  try {
    std::size_t used = 0;
    scale = std::stof(scale_tok, &used);
    if (used != scale_tok.size()) throw std::invalid_argument("scale");
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedHeader, "bad scale '" + scale_tok + "'");
  }
  if (scale == 0.0f || !std::isfinite(scale)) {
    throw Error(ErrorCode::MalformedHeader, "scale must be finite and non-zero");
  }
  const std::size_t start = hdr.payload_start();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  check_payload_size(bytes.size() - std::min(start, bytes.size()), n * 4, "PFM");

  const bool little = scale < 0.0f;
  PfmImage out{GrayImage(w, h), scale};
  for (int row = 0; row < h; ++row) {
    const int v = h - 1 - row;
    const std::uint8_t* src = bytes.data() + start + static_cast<std::size_t>(row) * w * 4;
    for (int u = 0; u < w; ++u) out.raster(u, v) = load_f32(src + 4 * u, little);
  }
  return out;
}

PfmImage read_pfm(const std::filesystem::path& path) { return parse_pfm(read_file(path)); }

Bytes encode_pfm(const GrayImage& raster, float scale) {
  if (raster.width() <= 0 || raster.height() <= 0) {
    throw Error(ErrorCode::MalformedInput, "cannot encode an empty raster as PFM");
  }
  if (scale == 0.0f || !std::isfinite(scale)) {
    throw Error(ErrorCode::MalformedInput, "PFM scale must be finite and non-zero");
  }
  std::ostringstream hdr;
  hdr << "Pf\n" << raster.width() << ' ' << raster.height() << '\n';
  hdr.precision(9);
  hdr << scale << '\n';
  const std::string header = hdr.str();

  Bytes out(header.begin(), header.end());
  const std::size_t start = out.size();
  out.resize(start + static_cast<std::size_t>(raster.width()) * raster.height() * 4);
  const bool little = scale < 0.0f;
  for (int row = 0; row < raster.height(); ++row) {
    const int v = raster.height() - 1 - row;
    std::uint8_t* dst = out.data() + start + static_cast<std::size_t>(row) * raster.width() * 4;
    for (int u = 0; u < raster.width(); ++u) store_f32(dst + 4 * u, raster(u, v), little);
  }
  return out;
}

void write_pfm(const GrayImage& raster, const std::filesystem::path& path, float scale) {
  write_file(path, encode_pfm(raster, scale));
}

FeaturePyramid parse_feature_pyramid(const Bytes& bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::UnexpectedEof, "D3FP header truncated");
  if (std::memcmp(bytes.data(), "D3FP", 4) != 0) throw Error(ErrorCode::BadMagic, "not a D3FP file");
  if (bytes.size() < 12) throw Error(ErrorCode::UnexpectedEof, "D3FP header truncated");
  const std::uint32_t version = load_u32le(bytes.data() + 4);
  if (version != 1) {
    throw Error(ErrorCode::UnsupportedVersion, "D3FP version " + std::to_string(version));
  }
  const std::uint32_t levels = load_u32le(bytes.data() + 8);
  if (levels < 2 || levels > 32) {
    throw Error(ErrorCode::MalformedHeader, "D3FP level count must be in [2, 32]");
  }
  std::size_t pos = 12;
  if (bytes.size() < pos + 12u * levels) throw Error(ErrorCode::UnexpectedEof, "D3FP level table truncated");

  FeaturePyramid pyr;
  std::size_t payload = 0;
  for (std::uint32_t i = 0; i < levels; ++i) {
    FeatureMap m;
    const std::uint32_t h = load_u32le(bytes.data() + pos);
    const std::uint32_t w = load_u32le(bytes.data() + pos + 4);
    const std::uint32_t c = load_u32le(bytes.data() + pos + 8);
    pos += 12;
    if (h == 0 || w == 0 || c == 0 || h > (1u << 20) || w > (1u << 20) || c > (1u << 16)) {
      throw Error(ErrorCode::MalformedHeader, "D3FP level " + std::to_string(i) + " has bad shape");
    }
    m.height = static_cast<int>(h);
    m.width = static_cast<int>(w);
    m.channels = static_cast<int>(c);
    if (i > 0) {
      const auto& prev = pyr.levels.back();
      if (!is_halving(prev.height, m.height) || !is_halving(prev.width, m.width)) {
        throw Error(ErrorCode::NonHalvingResolution,
                    "level " + std::to_string(i) + " does not halve its predecessor");
      }
    }
    payload += static_cast<std::size_t>(h) * w * c * 4;
    pyr.levels.push_back(std::move(m));
  }
  check_payload_size(bytes.size() - pos, payload, "D3FP");

  for (auto& m : pyr.levels) {
    m.data.resize(static_cast<std::size_t>(m.height) * m.width * m.channels);
    for (auto& x : m.data) {
      x = load_f32(bytes.data() + pos, true);
      pos += 4;
      if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteFeature, "non-finite feature value");
    }
  }
  return pyr;
}

FeaturePyramid read_feature_pyramid(const std::filesystem::path& path) {
  return parse_feature_pyramid(read_file(path));
}

Bytes encode_feature_pyramid(const FeaturePyramid& pyramid) {
  Bytes out{'D', '3', 'F', 'P'};
  append_u32le(out, 1);
  append_u32le(out, static_cast<std::uint32_t>(pyramid.levels.size()));
  for (const auto& m : pyramid.levels) {
    append_u32le(out, static_cast<std::uint32_t>(m.height));
    append_u32le(out, static_cast<std::uint32_t>(m.width));
    append_u32le(out, static_cast<std::uint32_t>(m.channels));
  }
  for (const auto& m : pyramid.levels) {
    if (m.data.size() != static_cast<std::size_t>(m.height) * m.width * m.channels) {
      throw Error(ErrorCode::MalformedInput, "feature map data length mismatch");
    }
    for (const float x : m.data) append_f32le(out, x);
  }
  return out;
}

void write_feature_pyramid(const FeaturePyramid& pyramid, const std::filesystem::path& path) {
  write_file(path, encode_feature_pyramid(pyramid));
}

GrayImage decode_image(const Bytes& bytes) {
  if (is_png(bytes)) return decode_png_gray(bytes);
  if (is_gray_pnm(bytes)) {
    const ColorImage c = decode_pnm(bytes);
    GrayImage out(c.width, c.height);
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = c.rgb[3 * i];
    return out;
  }
  if (is_pnm(bytes)) return decode_pnm(bytes).luminance();
  throw Error(ErrorCode::UnsupportedFormat, "expected PNG, PGM (P5) or PPM (P6)");
}

ColorImage decode_color_image(const Bytes& bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (is_pnm(bytes)) return decode_pnm(bytes);
  throw Error(ErrorCode::UnsupportedFormat, "expected PNG, PGM (P5) or PPM (P6)");
}

GrayImage read_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

ColorImage read_color_image(const std::filesystem::path& path) {
  return decode_color_image(read_file(path));
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  Bytes out(header.begin(), header.end());
  for (const float x : img.data()) out.push_back(to_byte(x));
  write_file(path, out);
}

void write_png(const GrayImage& img, const std::filesystem::path& path) {
  std::vector<std::uint8_t> buf(img.data().size());
  std::transform(img.data().begin(), img.data().end(), buf.begin(), to_byte);
  write_png_buffer(buf.data(), img.width(), img.height(), false, path);
}

void write_png(const ColorImage& img, const std::filesystem::path& path) {
  write_png_buffer(img.rgb.data(), img.width, img.height, true, path);
}

ColorImage colorize_disparity(const GrayImage& disparity, float d_max) {
  ColorImage out{disparity.width(), disparity.height(),
                 std::vector<std::uint8_t>(disparity.data().size() * 3, 0)};
  const float scale = d_max > 0.0f ? 1.0f / d_max : 0.0f;
  for (std::size_t i = 0; i < disparity.data().size(); ++i) {
    const float d = disparity.data()[i];
    if (!std::isfinite(d) || d < 0.0f) continue;
    const float t = std::clamp(d * scale, 0.0f, 1.0f);
    auto channel = [t](float center) {
      return std::clamp(1.5f - std::fabs(4.0f * t - center), 0.0f, 1.0f);
    };
    out.rgb[3 * i] = to_byte(255.0f * channel(3.0f));
    out.rgb[3 * i + 1] = to_byte(255.0f * channel(2.0f));
    out.rgb[3 * i + 2] = to_byte(255.0f * channel(1.0f));
  }
  return out;
}

Bytes encode_cost_volume(const CostVolume& volume) {
  Bytes out{'D', '3', 'C', 'V'};
  append_u32le(out, 1);
  append_u32le(out, static_cast<std::uint32_t>(volume.width()));
  append_u32le(out, static_cast<std::uint32_t>(volume.height()));
  append_u32le(out, static_cast<std::uint32_t>(volume.d_max()));
  append_u32le(out, static_cast<std::uint32_t>(volume.level()));
  out.reserve(out.size() + volume.raw_costs().size() * 5);
  for (const float c : volume.raw_costs()) append_f32le(out, c);
  out.insert(out.end(), volume.raw_sentinels().begin(), volume.raw_sentinels().end());
  return out;
}

CostVolume parse_cost_volume(const Bytes& bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::UnexpectedEof, "D3CV header truncated");
  if (std::memcmp(bytes.data(), "D3CV", 4) != 0) throw Error(ErrorCode::BadMagic, "not a D3CV file");
  if (bytes.size() < 24) throw Error(ErrorCode::UnexpectedEof, "D3CV header truncated");
  if (load_u32le(bytes.data() + 4) != 1) throw Error(ErrorCode::UnsupportedVersion, "D3CV version");
  const std::uint32_t w = load_u32le(bytes.data() + 8);
  const std::uint32_t h = load_u32le(bytes.data() + 12);
  const std::uint32_t d_max = load_u32le(bytes.data() + 16);
  const std::uint32_t level = load_u32le(bytes.data() + 20);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16) || d_max > 4096) {
    throw Error(ErrorCode::MalformedHeader, "D3CV dimensions out of range");
  }
  CostVolume vol(static_cast<int>(w), static_cast<int>(h), static_cast<int>(d_max),
                 static_cast<int>(level));
  const std::size_t n = vol.raw_costs().size();
  check_payload_size(bytes.size() - 24, n * 5, "D3CV");
  for (std::size_t i = 0; i < n; ++i) vol.raw_costs()[i] = load_f32(bytes.data() + 24 + 4 * i, true);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t flag = bytes[24 + 4 * n + i];
    if (flag > 1) throw Error(ErrorCode::MalformedInput, "D3CV sentinel flag must be 0 or 1");
    vol.raw_sentinels()[i] = flag;
  }
  return vol;
}

void write_cost_volume(const CostVolume& volume, const std::filesystem::path& path) {
  write_file(path, encode_cost_volume(volume));
}

CostVolume read_cost_volume(const std::filesystem::path& path) {
  return parse_cost_volume(read_file(path));
}

}  // namespace d3stereo::io
