#pragma once

// Georeferenced top-down rasters, the altitude <-> footprint camera model,
// and observation cropping.
//
// World/pixel convention: the raster covers [0, W*mpp] x [0, H*mpp]. Pixel
// column c spans x in [c*mpp, (c+1)*mpp]; image row 0 is the northern edge,
// so row r spans y in [(H-r-1)*mpp, (H-r)*mpp].

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avdn/geometry.hpp"
#include "avdn/image.hpp"

namespace avdn {

struct CameraModel {
  double fov_degrees = 90.0;
  double min_altitude = 10.0;
  double max_altitude = 500.0;

  void validate() const {
    if (!(fov_degrees > 0.0 && fov_degrees < 180.0)) throw Error(ErrorCode::InvalidArgument, "fov out of (0,180)");
    if (!(min_altitude > 0.0 && min_altitude < max_altitude)) {
      throw Error(ErrorCode::InvalidArgument, "altitude range must satisfy 0 < min < max");
    }
  }

  double scale() const { return 2.0 * std::tan(deg2rad(fov_degrees) / 2.0); }

  bool altitude_in_range(double h) const {
    const double slack = 1e-9 * max_altitude;
    return h >= min_altitude - slack && h <= max_altitude + slack;
  }

  double min_width() const { return min_altitude * scale(); }
  double max_width() const { return max_altitude * scale(); }
};

/// Footprint width for a drone at altitude `h`: w = 2 h tan(fov / 2).
inline double width_from_altitude(const CameraModel& cam, double h) {
  if (!cam.altitude_in_range(h)) {
    throw Error(ErrorCode::AltitudeOutOfRange, "altitude " + std::to_string(h) + " m outside camera range");
  }
  return h * cam.scale();
}

inline double altitude_from_width(const CameraModel& cam, double w) {
  const double h = w / cam.scale();
  if (!cam.altitude_in_range(h)) {
    throw Error(ErrorCode::WidthOutOfRange, "width " + std::to_string(w) + " m outside camera range");
  }
  return h;
}

class RasterEnvironment {
 public:
  RasterEnvironment(std::string env_id, Image pixels, double meters_per_pixel)
      : env_id_(std::move(env_id)), pixels_(std::move(pixels)), mpp_(meters_per_pixel) {
    if (pixels_.width() < 64 || pixels_.height() < 64) {
      throw Error(ErrorCode::InvalidArgument, "environment raster must be at least 64x64");
    }
    if (!(mpp_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "meters_per_pixel must be positive");
  }

  const std::string& env_id() const { return env_id_; }
  const Image& pixels() const { return pixels_; }
  double meters_per_pixel() const { return mpp_; }
  AxisRect extent() const { return {{0.0, 0.0}, {pixels_.width() * mpp_, pixels_.height() * mpp_}}; }

  /// Continuous pixel coordinates (column, row) of a world point, measured
  /// from the top-left corner of the raster.
  std::array<double, 2> to_pixel(WorldPoint p) const { return {p.x / mpp_, pixels_.height() - p.y / mpp_}; }
  WorldPoint to_world(double col, double row) const { return {col * mpp_, (pixels_.height() - row) * mpp_}; }

 private:
  std::string env_id_;
  Image pixels_;
  double mpp_;
};

/// An environment plus the object boxes available as destinations.
struct EnvironmentBundle {
  RasterEnvironment env;
  std::vector<AxisRect> objects;
};

inline bool in_bounds(const RasterEnvironment& env, const ViewArea& view) {
  const AxisRect ext = env.extent();
  const ConvexPolygon poly = corners(view);
  for (const auto& c : poly.vertices()) {
    if (c.x < ext.min.x - kGeomEps || c.x > ext.max.x + kGeomEps || c.y < ext.min.y - kGeomEps ||
        c.y > ext.max.y + kGeomEps) {
      return false;
    }
  }
  return true;
}

enum class Sampling { Bilinear, Nearest };

struct Observation {
  Image image;
  ViewArea view;
  Heading compass;
};

/// World point at the center of output pixel (col, row) of an R x R view
/// image. Row 0 is the far edge along the heading.
inline WorldPoint view_pixel_to_world(const ViewArea& view, int resolution, double col, double row) {
  const double right = (col / resolution - 0.5) * view.width;
  const double forward = (0.5 - row / resolution) * view.width;
  return view.to_world(right, forward);
}

/// Inverse of view_pixel_to_world for continuous pixel coordinates.
inline std::array<double, 2> world_to_view_pixel(const ViewArea& view, int resolution, WorldPoint p) {
  const WorldPoint d = p - view.center;
  const double right = dot(d, view.rotation.right());
  const double forward = dot(d, view.rotation.forward());
  return {(right / view.width + 0.5) * resolution, (0.5 - forward / view.width) * resolution};
}

inline Observation observe(const RasterEnvironment& env, const ViewArea& view, int resolution = 224,
                           Sampling sampling = Sampling::Bilinear) {
  if (resolution <= 0) throw Error(ErrorCode::InvalidArgument, "resolution must be positive");
  if (!in_bounds(env, view)) throw Error(ErrorCode::OutOfBounds, "view area leaves the environment extent");

  const Image& src = env.pixels();
  const int W = src.width(), H = src.height();
  Image out(resolution, resolution);
  for (int row = 0; row < resolution; ++row) {
    for (int col = 0; col < resolution; ++col) {
      const WorldPoint p = view_pixel_to_world(view, resolution, col + 0.5, row + 0.5);
      const auto [u, v] = env.to_pixel(p);
      std::uint8_t* dst = out.px(col, row);
      if (sampling == Sampling::Nearest) {
        const int x = std::clamp(static_cast<int>(std::floor(u)), 0, W - 1);
        const int y = std::clamp(static_cast<int>(std::floor(v)), 0, H - 1);
        const std::uint8_t* s = src.px(x, y);
        dst[0] = s[0];
        dst[1] = s[1];
        dst[2] = s[2];
        continue;
      }
      // Bilinear over pixel centers; edge pixels are clamped.
      const double fu = std::clamp(u - 0.5, 0.0, static_cast<double>(W - 1));
      const double fv = std::clamp(v - 0.5, 0.0, static_cast<double>(H - 1));
      const int x0 = std::min(static_cast<int>(fu), W - 2);
      const int y0 = std::min(static_cast<int>(fv), H - 2);
      const double tx = fu - x0, ty = fv - y0;
      const std::uint8_t* a = src.px(x0, y0);
      const std::uint8_t* b = src.px(x0 + 1, y0);
      const std::uint8_t* c = src.px(x0, y0 + 1);
      const std::uint8_t* d = src.px(x0 + 1, y0 + 1);
      for (int k = 0; k < 3; ++k) {
        const double top = a[k] + tx * (b[k] - a[k]);
        const double bot = c[k] + tx * (d[k] - c[k]);
        dst[k] = static_cast<std::uint8_t>(std::lround(std::clamp(top + ty * (bot - top), 0.0, 255.0)));
      }
    }
  }
  return {std::move(out), view, view.rotation};
}

// ---------------------------------------------------------------- bundles on disk

inline nlohmann::json rect_to_json(const AxisRect& r) {
  return {{"min_x", r.min.x}, {"min_y", r.min.y}, {"max_x", r.max.x}, {"max_y", r.max.y}};
}

inline AxisRect rect_from_json(const nlohmann::json& j) {
  return {{j.at("min_x").get<double>(), j.at("min_y").get<double>()},
          {j.at("max_x").get<double>(), j.at("max_y").get<double>()}};
}

inline void save_environment(const EnvironmentBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& env = b.env;
  write_png(dir / (env.env_id() + ".png"), env.pixels());
  nlohmann::json meta = {{"env_id", env.env_id()},
                         {"meters_per_pixel", env.meters_per_pixel()},
                         {"width_px", env.pixels().width()},
                         {"height_px", env.pixels().height()},
                         {"objects", nlohmann::json::array()}};
  for (const auto& o : b.objects) meta["objects"].push_back(rect_to_json(o));
  std::ofstream f(dir / (env.env_id() + ".json"));
  if (!f) throw Error(ErrorCode::IoError, "cannot write sidecar for " + env.env_id());
  f << meta.dump(2) << '\n';
}

inline EnvironmentBundle load_environment(const std::filesystem::path& dir, const std::string& env_id) {
  const auto meta_path = dir / (env_id + ".json");
  std::ifstream f(meta_path);
  if (!f) throw Error(ErrorCode::UnknownEnvironment, "no sidecar " + meta_path.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, meta_path.string() + ": " + e.what());
  }
  Image img = read_png(dir / (env_id + ".png"));
  if (meta.value("width_px", -1) != img.width() || meta.value("height_px", -1) != img.height()) {
    throw Error(ErrorCode::IoError, "sidecar size does not match raster for " + env_id);
  }
  EnvironmentBundle b{RasterEnvironment(meta.at("env_id").get<std::string>(), std::move(img),
                                        meta.at("meters_per_pixel").get<double>()),
                      {}};
  for (const auto& o : meta.value("objects", nlohmann::json::array())) b.objects.push_back(rect_from_json(o));
  return b;
}

/// Lazily loads bundles from a directory and shares them read-only.
class EnvironmentStore {
 public:
  explicit EnvironmentStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(std::shared_ptr<const EnvironmentBundle> b) {
    std::lock_guard lock(mu_);
    cache_[b->env.env_id()] = std::move(b);
  }

  std::shared_ptr<const EnvironmentBundle> get(const std::string& env_id) const {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(env_id); it != cache_.end()) return it->second;
    if (dir_.empty() || env_id.find('/') != std::string::npos || env_id.find("..") != std::string::npos) {
      throw Error(ErrorCode::UnknownEnvironment, env_id);
    }
    auto b = std::make_shared<const EnvironmentBundle>(load_environment(dir_, env_id));
    cache_[env_id] = b;
    return b;
  }

  std::vector<std::string> list() const {
    std::vector<std::string> ids;
    {
      std::lock_guard lock(mu_);
      for (const auto& [id, _] : cache_) ids.push_back(id);
    }
    if (!dir_.empty() && std::filesystem::is_directory(dir_)) {
      for (const auto& e : std::filesystem::directory_iterator(dir_)) {
        if (e.path().extension() == ".json" && std::filesystem::exists(std::filesystem::path(e.path()).replace_extension(".png"))) {
          ids.push_back(e.path().stem().string());
        }
      }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::shared_ptr<const EnvironmentBundle>> cache_;
};

}  // namespace avdn
