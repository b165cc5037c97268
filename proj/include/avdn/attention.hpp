#pragma once

// Human attention: click disks retained across views, binary masks in the
// observation pixel grid, and the NSS score for predicted saliency.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "avdn/attention_types.hpp"
#include "avdn/raster_env.hpp"

namespace avdn {

struct AttentionMask {
  int resolution = 0;
  std::vector<std::uint8_t> grid;  // row-major, 0 or 1
  ViewArea view;

  std::uint8_t at(int col, int row) const { return grid[static_cast<std::size_t>(row) * resolution + col]; }
  std::size_t attended() const {
    std::size_t n = 0;
    for (auto v : grid) n += v;
    return n;
  }
  double attended_fraction() const { return grid.empty() ? 0.0 : static_cast<double>(attended()) / grid.size(); }
};

struct SaliencyMap {
  int resolution = 0;
  std::vector<double> grid;  // row-major
};

/// Rasterizes the union of all click disks (radius width_at_click / 10,
/// closed) into the pixel grid of `view`. Click order does not matter.
inline AttentionMask render_mask(std::span<const AttentionClick> clicks, const ViewArea& view, int resolution) {
  if (resolution <= 0) throw Error(ErrorCode::InvalidArgument, "resolution must be positive");
  AttentionMask m{resolution, std::vector<std::uint8_t>(static_cast<std::size_t>(resolution) * resolution, 0), view};
  const double px_per_m = resolution / view.width;
  for (const auto& c : clicks) {
    // Only scan the disk's bounding box in view-pixel space.
    const auto [cc, cr] = world_to_view_pixel(view, resolution, c.world_point);
    const double rp = c.radius() * px_per_m;
    const int c0 = std::max(0, static_cast<int>(std::floor(cc - rp)) - 1);
    const int c1 = std::min(resolution - 1, static_cast<int>(std::ceil(cc + rp)) + 1);
    const int r0 = std::max(0, static_cast<int>(std::floor(cr - rp)) - 1);
    const int r1 = std::min(resolution - 1, static_cast<int>(std::ceil(cr + rp)) + 1);
    const double r2 = c.radius() * c.radius();
    for (int row = r0; row <= r1; ++row) {
      for (int col = c0; col <= c1; ++col) {
        const WorldPoint p = view_pixel_to_world(view, resolution, col + 0.5, row + 0.5);
        const double dx = p.x - c.world_point.x, dy = p.y - c.world_point.y;
        if (dx * dx + dy * dy <= r2) m.grid[static_cast<std::size_t>(row) * resolution + col] = 1;
      }
    }
  }
  return m;
}

/// Removes every click whose disk contains `p`.
inline std::vector<AttentionClick> remove_click(std::vector<AttentionClick> clicks, WorldPoint p) {
  std::erase_if(clicks, [&](const AttentionClick& c) { return distance(c.world_point, p) <= c.radius(); });
  return clicks;
}

/// Click at observation pixel (px, py) of an R x R view image.
inline AttentionClick click_from_pixel(const ViewArea& view, int resolution, double px, double py) {
  return {view_pixel_to_world(view, resolution, px, py), view.width};
}

/// Normalized scanpath saliency: standardize P (population mean and
/// standard deviation) and average it over attended pixels of Q.
/// Returns 0 when P is constant.
inline double nss(const SaliencyMap& p, const AttentionMask& q) {
  if (p.grid.size() != q.grid.size()) throw Error(ErrorCode::InvalidArgument, "saliency and mask shapes differ");
  const std::size_t n_attended = q.attended();
  if (n_attended == 0) throw Error(ErrorCode::EmptyGroundTruth, "attention mask has no attended pixels");

  const auto [lo, hi] = std::minmax_element(p.grid.begin(), p.grid.end());
  if (*lo == *hi) return 0.0;

  const double n = static_cast<double>(p.grid.size());
  double mean = 0.0;
  for (double v : p.grid) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : p.grid) var += (v - mean) * (v - mean);
  const double sigma = std::sqrt(var / n);

  double sum = 0.0;
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    if (q.grid[i]) sum += (p.grid[i] - mean) / sigma;
  }
  return sum / static_cast<double>(n_attended);
}

}  // namespace avdn
