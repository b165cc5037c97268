#pragma once

// Commander's trajectory overview: a north-up crop around the start, the
// destination and the flown path, with fixed marker styling.

#include <array>
#include <vector>

#include "avdn/session.hpp"

namespace avdn {

/// Styling is frozen: golden images depend on every value here.
struct OverviewStyle {
  int size_px = 512;
  double margin_m = 80.0;
  Rgb outside{96, 96, 96};
  Rgb start{220, 20, 20};
  double start_radius_px = 6.0;
  double arrow_length_px = 24.0;
  double arrow_head_px = 8.0;
  double arrow_width_px = 3.0;
  Rgb destination{255, 210, 0};
  double destination_width_px = 3.0;
  Rgb trajectory{0, 190, 255};
  double trajectory_width_px = 2.5;
  double dash_px = 10.0;
  double gap_px = 6.0;
  Rgb view{255, 255, 255};
  double view_width_px = 2.0;
};

struct OverviewRender {
  Image image;
  AxisRect window;  // world rectangle shown
  std::vector<WorldPoint> polyline;
  ViewArea current;
};

namespace detail {

inline std::vector<WorldPoint> join_centers(std::span<const SubTrajectory> subs) {
  std::vector<WorldPoint> pts;
  for (const auto& s : subs) {
    for (const auto& st : s.states) {
      if (!pts.empty() && distance(pts.back(), st.position) < kGeomEps) continue;
      pts.push_back(st.position);
    }
  }
  return pts;
}

}  // namespace detail

/// Renders the overview with the sub-trajectories before `at_round` as the
/// past path and `current` as the current view.
inline OverviewRender render_overview(const RasterEnvironment& env, const CameraModel& cam, const DroneState& start,
                                      const AxisRect& destination, std::span<const SubTrajectory> past,
                                      const DroneState& current, const OverviewStyle& style = {}) {
  OverviewRender out;
  out.polyline = past.empty() ? std::vector<WorldPoint>{} : detail::join_centers(past);
  out.current = current.view(cam);

  AxisRect box{destination.min, destination.max};
  auto grow = [&](WorldPoint p) {
    box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y)};
    box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y)};
  };
  grow(start.position);
  for (const auto& p : out.polyline) grow(p);
  const ConvexPolygon cur = corners(out.current);
  for (const auto& p : cur.vertices()) grow(p);

  const double side = std::max(box.width(), box.height()) + 2.0 * style.margin_m;
  const WorldPoint c = box.center();
  out.window = {{c.x - side / 2, c.y - side / 2}, {c.x + side / 2, c.y + side / 2}};
  const int n = style.size_px;
  const double px_per_m = n / side;

  Image img(n, n, style.outside);
  const AxisRect ext = env.extent();
  const Image& src = env.pixels();
  for (int r = 0; r < n; ++r) {
    const double y = out.window.max.y - (r + 0.5) / px_per_m;
    if (y < ext.min.y || y >= ext.max.y) continue;
    for (int col = 0; col < n; ++col) {
      const double x = out.window.min.x + (col + 0.5) / px_per_m;
      if (x < ext.min.x || x >= ext.max.x) continue;
      const auto [pc, pr] = env.to_pixel({x, y});
      const int sc = std::clamp(static_cast<int>(pc), 0, src.width() - 1);
      const int sr = std::clamp(static_cast<int>(pr), 0, src.height() - 1);
      img.set(col, r, src.at(sc, sr));
    }
  }

  auto to_px = [&](WorldPoint p) -> std::array<double, 2> {
    return {(p.x - out.window.min.x) * px_per_m, (out.window.max.y - p.y) * px_per_m};
  };

  std::vector<std::array<double, 2>> dest_px;
  const ConvexPolygon dest_poly = ConvexPolygon::from_rect(destination);
  for (const auto& p : dest_poly.vertices()) dest_px.push_back(to_px(p));
  draw::closed_polyline(img, dest_px, style.destination_width_px, style.destination);

  if (out.polyline.size() >= 2) {
    std::vector<std::array<double, 2>> path;
    for (const auto& p : out.polyline) path.push_back(to_px(p));
    draw::dashed_polyline(img, path, style.trajectory_width_px, style.dash_px, style.gap_px, style.trajectory);
  }

  std::vector<std::array<double, 2>> view_px;
  for (const auto& p : cur.vertices()) view_px.push_back(to_px(p));
  draw::closed_polyline(img, view_px, style.view_width_px, style.view);

  const auto s = to_px(start.position);
  const WorldPoint f = start.heading.forward();  // screen y grows southward
  const double tip_x = s[0] + f.x * style.arrow_length_px, tip_y = s[1] - f.y * style.arrow_length_px;
  draw::segment(img, s[0], s[1], tip_x, tip_y, style.arrow_width_px, style.start);
  for (double side_sign : {-1.0, 1.0}) {
    const Heading barb = start.heading + (180.0 + side_sign * 30.0);
    const WorldPoint b = barb.forward();
    draw::segment(img, tip_x, tip_y, tip_x + b.x * style.arrow_head_px, tip_y - b.y * style.arrow_head_px,
                  style.arrow_width_px, style.start);
  }
  draw::disc(img, s[0], s[1], style.start_radius_px, style.start);

  out.image = std::move(img);
  return out;
}

/// Overview of a recorded episode at dialog round `at_round` in [0, M]:
/// round r shows sub-trajectories 0..r-1 and the view that opens round r
/// (or the final view when r == M).
inline OverviewRender render_overview(const RasterEnvironment& env, const CameraModel& cam, const Episode& ep,
                                      int at_round, const OverviewStyle& style = {}) {
  const int m = static_cast<int>(ep.sub_trajectories.size());
  if (at_round < 0 || at_round > m) {
    throw Error(ErrorCode::IndexOutOfRange, "round " + std::to_string(at_round) + " outside [0, " + std::to_string(m) + "]");
  }
  const std::span<const SubTrajectory> past(ep.sub_trajectories.data(), static_cast<std::size_t>(at_round));
  const DroneState current = at_round < m ? ep.sub_trajectories[static_cast<std::size_t>(at_round)].states.front()
                                          : ep.sub_trajectories.back().states.back();
  return render_overview(env, cam, ep.start, ep.destination, past, current, style);
}

/// Overview of a live session at round `at_round` in [0, current round];
/// the current round shows the drone where it is now.
inline OverviewRender render_overview(const Session& s, int at_round, const OverviewStyle& style = {}) {
  const auto& subs = s.sub_trajectories();
  const int current = s.round();
  if (at_round < 0 || at_round > current) {
    throw Error(ErrorCode::IndexOutOfRange, "round " + std::to_string(at_round) + " outside [0, " + std::to_string(current) + "]");
  }
  const std::span<const SubTrajectory> past(subs.data(), std::min(subs.size(), static_cast<std::size_t>(at_round)));
  const DroneState now = at_round == current ? s.drone() : subs[static_cast<std::size_t>(at_round)].states.front();
  return render_overview(s.environment().env, s.config().camera, s.task().task.start, s.task().destination, past, now,
                         style);
}

}  // namespace avdn
