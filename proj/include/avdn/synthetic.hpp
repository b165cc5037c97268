#pragma once

// Deterministic synthetic worlds standing in for satellite scenes: textured
// land-cover regions, roads, small blobs (trees/ponds), and rooftop-like
// object boxes that serve as destinations.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "avdn/raster_env.hpp"
#include "avdn/rng.hpp"

namespace avdn {

struct SyntheticWorldSpec {
  std::uint64_t seed = 0;
  int size_px = 4096;
  double meters_per_pixel = 0.3;
  int object_count = 20;
  double min_object_side = 60.0;
  double max_object_side = 200.0;
  double max_object_aspect = 2.0;
};

namespace detail {

inline std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))); }

// Integer hash for per-pixel grain.
inline std::uint32_t hash32(std::uint32_t x, std::uint32_t y, std::uint32_t s) {
  std::uint32_t h = x * 374761393u + y * 668265263u + s * 2246822519u;
  h = (h ^ (h >> 13)) * 1274126177u;
  return h ^ (h >> 16);
}

}  // namespace detail

inline EnvironmentBundle generate_synthetic_world(const SyntheticWorldSpec& spec) {
  if (spec.size_px < 64) throw Error(ErrorCode::InvalidArgument, "size_px must be at least 64");
  if (!(spec.meters_per_pixel > 0.0)) throw Error(ErrorCode::InvalidArgument, "meters_per_pixel must be positive");
  if (spec.object_count < 0) throw Error(ErrorCode::InvalidArgument, "object_count must be non-negative");

  Rng rng(spec.seed);
  const int n = spec.size_px;
  const double mpp = spec.meters_per_pixel;
  const double extent_m = n * mpp;

  // Land-cover regions (Voronoi cells), each with a base color.
  static constexpr Rgb kPalette[] = {
      {86, 118, 62}, {118, 140, 78}, {168, 150, 104}, {140, 122, 88}, {98, 104, 70}, {184, 170, 132}, {152, 146, 130},
  };
  struct Seed {
    double x, y;
    Rgb color;
  };
  std::vector<Seed> seeds;
  const int region_count = 8 + n / 512;
  for (int i = 0; i < region_count; ++i) {
    seeds.push_back({rng.uniform(0, n), rng.uniform(0, n), kPalette[rng.uniform_int(0, std::size(kPalette) - 1)]});
  }

  // Coarse value-noise lattice for brightness modulation.
  const int cell = 32;
  const int lattice = n / cell + 2;
  std::vector<double> noise(static_cast<std::size_t>(lattice) * lattice);
  for (auto& v : noise) v = rng.uniform(-1.0, 1.0);

  struct Road {
    double nx, ny, c, half_width;
  };
  std::vector<Road> roads;
  const int road_count = 2 + n / 1024;
  for (int i = 0; i < road_count; ++i) {
    const double ang = rng.uniform(0.0, std::numbers::pi);
    const double px = rng.uniform(0, n), py = rng.uniform(0, n);
    const double nx = std::cos(ang), ny = std::sin(ang);
    roads.push_back({nx, ny, nx * px + ny * py, rng.uniform(8.0, 14.0) / mpp / 2.0});
  }

  const std::uint32_t grain_seed = static_cast<std::uint32_t>(rng.next());
  Image img(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const Seed* best = &seeds[0];
      double best_d = 1e300;
      for (const auto& s : seeds) {
        const double d = (s.x - px) * (s.x - px) + (s.y - py) * (s.y - py);
        if (d < best_d) {
          best_d = d;
          best = &s;
        }
      }
      const int gx = x / cell, gy = y / cell;
      const double tx = static_cast<double>(x % cell) / cell, ty = static_cast<double>(y % cell) / cell;
      const double n00 = noise[gy * lattice + gx], n10 = noise[gy * lattice + gx + 1];
      const double n01 = noise[(gy + 1) * lattice + gx], n11 = noise[(gy + 1) * lattice + gx + 1];
      const double nv = (n00 * (1 - tx) + n10 * tx) * (1 - ty) + (n01 * (1 - tx) + n11 * tx) * ty;
      const double grain = static_cast<double>(detail::hash32(x, y, grain_seed) % 13) - 6.0;
      double f = 1.0 + 0.14 * nv;
      Rgb base = best->color;
      for (const auto& r : roads) {
        if (std::abs(r.nx * px + r.ny * py - r.c) <= r.half_width) {
          base = {128, 128, 124};
          f = 1.0;
        }
      }
      img.set(x, y, {detail::clamp_u8(base.r * f + grain), detail::clamp_u8(base.g * f + grain),
                     detail::clamp_u8(base.b * f + grain)});
    }
  }

  // Trees and ponds.
  const int blob_count = static_cast<int>(static_cast<long long>(n) * n / 40000);
  for (int i = 0; i < blob_count; ++i) {
    const double cx = rng.uniform(0, n), cy = rng.uniform(0, n);
    const double r = rng.uniform(3.0, 12.0) / mpp;
    const bool pond = rng.uniform() < 0.15;
    draw::disc(img, cx, cy, r, pond ? Rgb{58, 88, 128} : Rgb{42, 78, 42});
  }

  std::vector<AxisRect> objects;
  const double margin = std::min(100.0, 0.1 * extent_m);
  if (spec.object_count > 0 && extent_m - 2 * margin < spec.max_object_side) {
    throw Error(ErrorCode::InvalidArgument, "world too small for destination objects");
  }
  static constexpr Rgb kRoofs[] = {{196, 72, 60}, {222, 222, 214}, {70, 96, 160}, {200, 168, 60}, {150, 60, 140}};
  const double gap = 5.0;
  int attempts = 0;
  while (static_cast<int>(objects.size()) < spec.object_count) {
    if (++attempts > 2000 * std::max(spec.object_count, 1)) {
      throw Error(ErrorCode::InvalidArgument, "could not place " + std::to_string(spec.object_count) + " objects");
    }
    const double a = rng.uniform(spec.min_object_side, spec.max_object_side);
    const double b = rng.uniform(std::max(spec.min_object_side, a / spec.max_object_aspect),
                                 std::min(spec.max_object_side, a * spec.max_object_aspect));
    const double x0 = rng.uniform(margin, extent_m - margin - a);
    const double y0 = rng.uniform(margin, extent_m - margin - b);
    const AxisRect box{{x0, y0}, {x0 + a, y0 + b}};
    bool clear = true;
    for (const auto& o : objects) {
      if (box.min.x < o.max.x + gap && o.min.x < box.max.x + gap && box.min.y < o.max.y + gap &&
          o.min.y < box.max.y + gap) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;
    objects.push_back(box);

    const Rgb roof = kRoofs[rng.uniform_int(0, std::size(kRoofs) - 1)];
    const Rgb edge{static_cast<std::uint8_t>(roof.r * 0.6), static_cast<std::uint8_t>(roof.g * 0.6),
                   static_cast<std::uint8_t>(roof.b * 0.6)};
    const int c0 = static_cast<int>(std::floor(box.min.x / mpp)), c1 = static_cast<int>(std::ceil(box.max.x / mpp));
    const int r0 = static_cast<int>(std::floor(n - box.max.y / mpp)), r1 = static_cast<int>(std::ceil(n - box.min.y / mpp));
    const int border = std::max(1, static_cast<int>(std::lround(1.5 / mpp)));
    for (int y = std::max(r0, 0); y < std::min(r1, n); ++y) {
      for (int x = std::max(c0, 0); x < std::min(c1, n); ++x) {
        const bool on_edge = x - c0 < border || c1 - 1 - x < border || y - r0 < border || r1 - 1 - y < border;
        img.set(x, y, on_edge ? edge : roof);
      }
    }
  }
  return {RasterEnvironment("synthetic-" + std::to_string(spec.seed), std::move(img), mpp), std::move(objects)};
}

}  // namespace avdn
