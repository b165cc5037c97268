#pragma once

// Drone state transitions for the two control regimes: discrete key presses
// (teleoperation) and waypoints inside the current view area. Transitions
// are pure; an action whose resulting view would leave the environment is
// rejected and the input state is returned untouched.

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "avdn/raster_env.hpp"

namespace avdn {

struct DroneState {
  WorldPoint position;
  Heading heading;
  double altitude = 100.0;

  ViewArea view(const CameraModel& cam) const { return {position, width_from_altitude(cam, altitude), heading}; }
  friend bool operator==(const DroneState&, const DroneState&) = default;
};

enum class KeyCommand { Forward, Back, Left, Right, RotCw, RotCcw, AltUp, AltDown };

inline constexpr std::array<KeyCommand, 8> kAllKeys = {KeyCommand::Forward, KeyCommand::Back,  KeyCommand::Left,
                                                       KeyCommand::Right,   KeyCommand::RotCw, KeyCommand::RotCcw,
                                                       KeyCommand::AltUp,   KeyCommand::AltDown};

inline std::string_view to_string(KeyCommand k) {
  switch (k) {
    case KeyCommand::Forward: return "forward";
    case KeyCommand::Back: return "back";
    case KeyCommand::Left: return "left";
    case KeyCommand::Right: return "right";
    case KeyCommand::RotCw: return "rot_cw";
    case KeyCommand::RotCcw: return "rot_ccw";
    case KeyCommand::AltUp: return "alt_up";
    case KeyCommand::AltDown: return "alt_down";
  }
  return "?";
}

inline std::optional<KeyCommand> key_from_string(std::string_view s) {
  for (auto k : kAllKeys) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// Target in the current view frame: x to the right, y forward, both in
/// [0,1] with (0.5, 0.5) at the view center; h is the target altitude.
struct Waypoint {
  double x = 0.5;
  double y = 0.5;
  double h = 100.0;
  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct ControlConfig {
  double step_fraction = 0.1;
  double rot_step = 15.0;
  double alt_factor = 1.1;

  void validate() const {
    if (!(step_fraction > 0.0 && step_fraction < 1.0)) throw Error(ErrorCode::InvalidArgument, "step_fraction");
    if (!(rot_step > 0.0 && rot_step < 90.0)) throw Error(ErrorCode::InvalidArgument, "rot_step");
    if (!(alt_factor > 1.0)) throw Error(ErrorCode::InvalidArgument, "alt_factor");
  }
};

/// Displacements shorter than this keep the current heading.
inline constexpr double kHeadingHoldDistance = 0.5;

enum class RejectReason { OutOfBounds };

inline std::string_view to_string(RejectReason) { return "OutOfBounds"; }

struct Transition {
  DroneState state;
  std::optional<RejectReason> rejected;

  bool accepted() const { return !rejected; }
};

inline Transition accept_if_in_bounds(const RasterEnvironment& env, const CameraModel& cam, const DroneState& before,
                                      const DroneState& after) {
  if (!in_bounds(env, after.view(cam))) return {before, RejectReason::OutOfBounds};
  return {after, std::nullopt};
}

inline Transition apply_key(const RasterEnvironment& env, const CameraModel& cam, const ControlConfig& cfg,
                            const DroneState& s, KeyCommand k) {
  DroneState next = s;
  const double step = cfg.step_fraction * width_from_altitude(cam, s.altitude);
  switch (k) {
    case KeyCommand::Forward: next.position = s.position + step * s.heading.forward(); break;
    case KeyCommand::Back: next.position = s.position - step * s.heading.forward(); break;
    case KeyCommand::Right: next.position = s.position + step * s.heading.right(); break;
    case KeyCommand::Left: next.position = s.position - step * s.heading.right(); break;
    case KeyCommand::RotCw: next.heading = s.heading + cfg.rot_step; break;
    case KeyCommand::RotCcw: next.heading = s.heading + (-cfg.rot_step); break;
    case KeyCommand::AltUp: next.altitude = std::min(s.altitude * cfg.alt_factor, cam.max_altitude); break;
    case KeyCommand::AltDown: next.altitude = std::max(s.altitude / cfg.alt_factor, cam.min_altitude); break;
  }
  return accept_if_in_bounds(env, cam, s, next);
}

inline void validate_waypoint(const CameraModel& cam, const Waypoint& w) {
  if (!(w.x >= 0.0 && w.x <= 1.0 && w.y >= 0.0 && w.y <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "waypoint x/y must lie in [0,1]");
  }
  if (!cam.altitude_in_range(w.h)) throw Error(ErrorCode::AltitudeOutOfRange, "waypoint altitude outside camera range");
}

/// The state a waypoint leads to, without the boundary check.
inline DroneState propose_waypoint(const CameraModel& cam, const DroneState& s, const Waypoint& w) {
  validate_waypoint(cam, w);
  const ViewArea v = s.view(cam);
  const WorldPoint target = v.to_world((w.x - 0.5) * v.width, (w.y - 0.5) * v.width);
  DroneState next{target, s.heading, w.h};
  if (distance(s.position, target) > kHeadingHoldDistance) next.heading = bearing(s.position, target);
  return next;
}

inline Transition apply_waypoint(const RasterEnvironment& env, const CameraModel& cam, const DroneState& s,
                                 const Waypoint& w) {
  return accept_if_in_bounds(env, cam, s, propose_waypoint(cam, s, w));
}

/// Waypoint that moves the drone from `s` to `target` at altitude `h`.
/// Coordinates are clamped to [0,1]; the target must lie inside the view.
inline Waypoint waypoint_to(const CameraModel& cam, const DroneState& s, WorldPoint target, double h) {
  const ViewArea v = s.view(cam);
  const WorldPoint d = target - s.position;
  return {std::clamp(0.5 + dot(d, v.rotation.right()) / v.width, 0.0, 1.0),
          std::clamp(0.5 + dot(d, v.rotation.forward()) / v.width, 0.0, 1.0), h};
}

/// Minimal signed heading change, in (-180, 180].
inline double rot_delta(const DroneState& before, const DroneState& after) {
  double d = std::fmod(after.heading.degrees() - before.heading.degrees(), 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

}  // namespace avdn
