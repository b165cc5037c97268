#pragma once

// Planar geometry in the world frame: x east, y north, meters. Headings are
// compass degrees, clockwise from north.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "avdn/errors.hpp"

namespace avdn {

inline constexpr double kGeomEps = 1e-9;       // meters
inline constexpr double kEmptyAreaEps = 1e-12;  // square meters

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

struct WorldPoint {
  double x = 0.0;
  double y = 0.0;

  friend WorldPoint operator+(WorldPoint a, WorldPoint b) { return {a.x + b.x, a.y + b.y}; }
  friend WorldPoint operator-(WorldPoint a, WorldPoint b) { return {a.x - b.x, a.y - b.y}; }
  friend WorldPoint operator*(double s, WorldPoint a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

inline double dot(WorldPoint a, WorldPoint b) { return a.x * b.x + a.y * b.y; }
inline double cross(WorldPoint a, WorldPoint b) { return a.x * b.y - a.y * b.x; }
inline double norm(WorldPoint a) { return std::hypot(a.x, a.y); }
inline double distance(WorldPoint a, WorldPoint b) { return norm(b - a); }

/// Compass heading, always normalized to [0, 360).
class Heading {
 public:
  constexpr Heading() = default;
  explicit Heading(double degrees) : deg_(normalize(degrees)) {}

  double degrees() const { return deg_; }
  double radians() const { return deg2rad(deg_); }

  /// Unit vector pointing along the heading.
  WorldPoint forward() const { return {std::sin(radians()), std::cos(radians())}; }
  /// Unit vector 90 degrees clockwise of the heading.
  WorldPoint right() const { return {std::cos(radians()), -std::sin(radians())}; }

  Heading operator+(double delta) const { return Heading(deg_ + delta); }
  friend bool operator==(const Heading&, const Heading&) = default;

  static double normalize(double degrees) {
    double d = std::fmod(degrees, 360.0);
    if (d < 0.0) d += 360.0;
    if (d >= 360.0) d = 0.0;
    return d;
  }

 private:
  double deg_ = 0.0;
};

/// Ground footprint of the downward camera: a square of side `width`
/// centered at `center` whose "up" edge faces `rotation`.
struct ViewArea {
  WorldPoint center;
  double width = 1.0;
  Heading rotation;

  /// Maps view-frame coordinates (right, forward), in meters from the
  /// center, to the world frame.
  WorldPoint to_world(double right_m, double forward_m) const {
    return center + right_m * rotation.right() + forward_m * rotation.forward();
  }
};

struct AxisRect {
  WorldPoint min;
  WorldPoint max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  double area() const { return width() * height(); }
  WorldPoint center() const { return {(min.x + max.x) / 2.0, (min.y + max.y) / 2.0}; }
  bool valid() const { return min.x < max.x && min.y < max.y; }
  friend bool operator==(const AxisRect&, const AxisRect&) = default;
};

/// Convex polygon with counter-clockwise vertices.
class ConvexPolygon {
 public:
  /// Validates the vertex list: at least three points, counter-clockwise,
  /// convex up to kGeomEps.
  static ConvexPolygon from_vertices(std::vector<WorldPoint> vertices) {
    if (vertices.size() < 3) throw Error(ErrorCode::InvalidArgument, "polygon needs at least 3 vertices");
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      const WorldPoint a = vertices[i];
      const WorldPoint b = vertices[(i + 1) % n];
      const WorldPoint c = vertices[(i + 2) % n];
      if (cross(b - a, c - b) < -kGeomEps) {
        throw Error(ErrorCode::InvalidArgument, "polygon is not convex counter-clockwise");
      }
    }
    ConvexPolygon p;
    p.vertices_ = std::move(vertices);
    if (p.area() <= 0.0) throw Error(ErrorCode::InvalidArgument, "polygon has non-positive area");
    return p;
  }

  static ConvexPolygon from_rect(const AxisRect& r) {
    return from_vertices({r.min, {r.max.x, r.min.y}, r.max, {r.min.x, r.max.y}});
  }

  std::span<const WorldPoint> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }

  double area() const {
    double twice = 0.0;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) twice += cross(vertices_[i], vertices_[(i + 1) % n]);
    return twice / 2.0;
  }

  WorldPoint centroid() const {
    double a2 = 0.0, cx = 0.0, cy = 0.0;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const WorldPoint p = vertices_[i], q = vertices_[(i + 1) % n];
      const double c = cross(p, q);
      a2 += c;
      cx += (p.x + q.x) * c;
      cy += (p.y + q.y) * c;
    }
    return {cx / (3.0 * a2), cy / (3.0 * a2)};
  }

  AxisRect bounds() const {
    AxisRect r{vertices_.front(), vertices_.front()};
    for (const auto& v : vertices_) {
      r.min.x = std::min(r.min.x, v.x);
      r.min.y = std::min(r.min.y, v.y);
      r.max.x = std::max(r.max.x, v.x);
      r.max.y = std::max(r.max.y, v.y);
    }
    return r;
  }

 private:
  ConvexPolygon() = default;

  std::vector<WorldPoint> vertices_;

  friend std::optional<ConvexPolygon> intersect(const ConvexPolygon&, const ConvexPolygon&);
};

inline ConvexPolygon corners(const ViewArea& v) {
  const double h = v.width / 2.0;
  return ConvexPolygon::from_vertices({
      v.to_world(-h, -h),
      v.to_world(h, -h),
      v.to_world(h, h),
      v.to_world(-h, h),
  });
}

inline bool contains(const AxisRect& rect, WorldPoint p) {
  return p.x >= rect.min.x && p.x <= rect.max.x && p.y >= rect.min.y && p.y <= rect.max.y;
}

namespace detail {

// Drops consecutive duplicates and collinear interior points.
inline std::vector<WorldPoint> simplify(const std::vector<WorldPoint>& in) {
  std::vector<WorldPoint> pts;
  for (const auto& p : in) {
    if (pts.empty() || distance(pts.back(), p) > kGeomEps) pts.push_back(p);
  }
  while (pts.size() > 1 && distance(pts.front(), pts.back()) <= kGeomEps) pts.pop_back();
  bool changed = true;
  while (changed && pts.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const WorldPoint a = pts[(i + pts.size() - 1) % pts.size()];
      const WorldPoint b = pts[i];
      const WorldPoint c = pts[(i + 1) % pts.size()];
      const double len = distance(a, c);
      if (len <= kGeomEps || std::abs(cross(b - a, c - a)) <= kGeomEps * len) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return pts;
}

}  // namespace detail

/// Sutherland-Hodgman clipping of `a` against each edge of `b`. Returns
/// nullopt when the overlap has (numerically) zero area.
inline std::optional<ConvexPolygon> intersect(const ConvexPolygon& a, const ConvexPolygon& b) {
  std::vector<WorldPoint> out(a.vertices_.begin(), a.vertices_.end());
  const std::size_t m = b.vertices_.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const WorldPoint p0 = b.vertices_[e];
    const WorldPoint p1 = b.vertices_[(e + 1) % m];
    const WorldPoint edge = p1 - p0;
    const double len = norm(edge);
    // Signed distance from the clip line, positive inside.
    auto side = [&](WorldPoint q) { return cross(edge, q - p0) / len; };

    std::vector<WorldPoint> in = std::move(out);
    out.clear();
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const WorldPoint cur = in[i];
      const WorldPoint nxt = in[(i + 1) % n];
      const double sc = side(cur);
      const double sn = side(nxt);
      const bool cin = sc >= -kGeomEps;
      const bool nin = sn >= -kGeomEps;
      if (cin) out.push_back(cur);
      if (cin != nin) {
        const double t = sc / (sc - sn);
        out.push_back(cur + t * (nxt - cur));
      }
    }
  }
  out = detail::simplify(out);
  if (out.size() < 3) return std::nullopt;
  ConvexPolygon result;
  result.vertices_ = std::move(out);
  if (result.area() < kEmptyAreaEps) return std::nullopt;
  return result;
}

inline double intersection_area(const ConvexPolygon& a, const ConvexPolygon& b) {
  const auto i = intersect(a, b);
  return i ? i->area() : 0.0;
}

inline double iou(const ConvexPolygon& a, const ConvexPolygon& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

inline double iou(const ViewArea& view, const AxisRect& dest) {
  return iou(corners(view), ConvexPolygon::from_rect(dest));
}

/// Compass bearing of `to` as seen from `from`.
inline Heading bearing(WorldPoint from, WorldPoint to) {
  const WorldPoint d = to - from;
  if (d.x == 0.0 && d.y == 0.0) throw Error(ErrorCode::ZeroDisplacement, "bearing between identical points");
  return Heading(rad2deg(std::atan2(d.x, d.y)));
}

/// Axis-aligned bounding box of a view footprint.
inline AxisRect bounding_rect(const ViewArea& v) { return corners(v).bounds(); }

}  // namespace avdn
