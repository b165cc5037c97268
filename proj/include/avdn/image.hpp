#pragma once

// 8-bit RGB images, PNG encode/decode (libpng), and the handful of raster
// drawing primitives needed for overview rendering.

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "avdn/errors.hpp"

namespace avdn {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3) {
    if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative image size");
    for (std::size_t i = 0; i < data_.size(); i += 3) {
      data_[i] = fill.r;
      data_[i + 1] = fill.g;
      data_[i + 2] = fill.b;
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t* px(int x, int y) { return &data_[(static_cast<std::size_t>(y) * width_ + x) * 3]; }
  const std::uint8_t* px(int x, int y) const { return &data_[(static_cast<std::size_t>(y) * width_ + x) * 3]; }

  Rgb at(int x, int y) const {
    const auto* p = px(x, y);
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    auto* p = px(x, y);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  /// Bounds-checked set; silently ignores pixels outside the image.
  void plot(int x, int y, Rgb c) {
    if (x >= 0 && y >= 0 && x < width_ && y < height_) set(x, y, c);
  }

  const std::vector<std::uint8_t>& bytes() const { return data_; }
  std::vector<std::uint8_t>& bytes() { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// FNV-1a over dimensions and pixel bytes.
inline std::uint64_t image_hash(const Image& img) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint8_t b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (int v : {img.width(), img.height()}) {
    for (int i = 0; i < 4; ++i) mix(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  for (auto b : img.bytes()) mix(b);
  return h;
}

// ---------------------------------------------------------------- PNG

namespace detail {

struct PngReadBuffer {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

inline void png_append(png_structp p, png_bytep data, png_size_t len) {
  auto* v = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
  v->insert(v->end(), data, data + len);
}

inline void png_consume(png_structp p, png_bytep out, png_size_t len) {
  auto* b = static_cast<PngReadBuffer*>(png_get_io_ptr(p));
  if (b->pos + len > b->size) png_error(p, "truncated PNG");
  std::memcpy(out, b->data + b->pos, len);
  b->pos += len;
}

}  // namespace detail

// libpng reports errors through longjmp; everything with a destructor is
// constructed before setjmp.
inline std::vector<std::uint8_t> encode_png(const Image& img) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::IoError, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, detail::png_append, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) png_write_row(png, const_cast<png_bytep>(img.px(0, y)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

inline Image decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::IoError, "not a PNG stream");
  }
  Image img;
  detail::PngReadBuffer buf{bytes.data(), bytes.size(), 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::IoError, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "PNG decoding failed");
  }
  png_set_read_fn(png, &buf, detail::png_consume);
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) png_error(png, "unsupported layout");
  img = Image(w, h);
  for (int y = 0; y < h; ++y) png_read_row(png, img.px(0, y), nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  const auto bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline Image read_png(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

inline std::string base64_encode(const std::vector<std::uint8_t>& in) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const std::uint32_t v = (in[i] << 16) | (in[i + 1] << 8) | in[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < in.size()) {
    std::uint32_t v = in[i] << 16;
    if (i + 1 < in.size()) v |= in[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += (i + 1 < in.size()) ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view in) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') break;
    const int v = val(c);
    if (v < 0) throw Error(ErrorCode::InvalidArgument, "invalid base64");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

// ---------------------------------------------------------------- drawing

namespace draw {

inline void disc(Image& img, double cx, double cy, double radius, Rgb c) {
  const int x0 = static_cast<int>(std::floor(cx - radius)), x1 = static_cast<int>(std::ceil(cx + radius));
  const int y0 = static_cast<int>(std::floor(cy - radius)), y1 = static_cast<int>(std::ceil(cy + radius));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= radius * radius) img.plot(x, y, c);
    }
  }
}

/// Thick segment: every pixel whose center lies within thickness/2 of the
/// segment. Pixel coordinates, (0,0) at the top-left pixel's corner.
inline void segment(Image& img, double ax, double ay, double bx, double by, double thickness, Rgb c) {
  const double r = thickness / 2.0;
  const int x0 = static_cast<int>(std::floor(std::min(ax, bx) - r));
  const int x1 = static_cast<int>(std::ceil(std::max(ax, bx) + r));
  const int y0 = static_cast<int>(std::floor(std::min(ay, by) - r));
  const int y1 = static_cast<int>(std::ceil(std::max(ay, by) + r));
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  for (int y = std::max(y0, 0); y <= std::min(y1, img.height() - 1); ++y) {
    for (int x = std::max(x0, 0); x <= std::min(x1, img.width() - 1); ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double qx = ax + t * dx - px, qy = ay + t * dy - py;
      if (qx * qx + qy * qy <= r * r) img.set(x, y, c);
    }
  }
}

/// Dashed polyline; the dash pattern continues across vertices.
inline void dashed_polyline(Image& img, const std::vector<std::array<double, 2>>& pts, double thickness,
                            double dash, double gap, Rgb c) {
  double phase = 0.0;  // distance already consumed in the current dash+gap period
  const double period = dash + gap;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double ax = pts[i][0], ay = pts[i][1];
    const double bx = pts[i + 1][0], by = pts[i + 1][1];
    const double len = std::hypot(bx - ax, by - ay);
    double s = 0.0;
    while (s < len) {
      const double in_period = std::fmod(phase + s, period);
      const double remaining = in_period < dash ? dash - in_period : period - in_period;
      const double e = std::min(len, s + std::max(remaining, 1e-9));
      if (in_period < dash) {
        const double t0 = s / len, t1 = e / len;
        segment(img, ax + t0 * (bx - ax), ay + t0 * (by - ay), ax + t1 * (bx - ax), ay + t1 * (by - ay), thickness, c);
      }
      s = e;
    }
    phase = std::fmod(phase + len, period);
  }
}

inline void closed_polyline(Image& img, const std::vector<std::array<double, 2>>& pts, double thickness, Rgb c) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % pts.size()];
    segment(img, a[0], a[1], b[0], b[1], thickness, c);
  }
}

}  // namespace draw

}  // namespace avdn
