#include <gtest/gtest.h>

#include <random>

#include "avdn/dynamics.hpp"

using namespace avdn;

namespace {

const RasterEnvironment& field() {
  static const RasterEnvironment env("field", Image(2000, 2000), 1.0);
  return env;
}

const CameraModel kCam;
const ControlConfig kCtl;

DroneState at(double x, double y, double heading, double alt) { return {{x, y}, Heading(heading), alt}; }

void expect_near(WorldPoint a, WorldPoint b, double tol = 1e-9) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
}

KeyCommand inverse(KeyCommand k) {
  switch (k) {
    case KeyCommand::Forward: return KeyCommand::Back;
    case KeyCommand::Back: return KeyCommand::Forward;
    case KeyCommand::Left: return KeyCommand::Right;
    case KeyCommand::Right: return KeyCommand::Left;
    case KeyCommand::RotCw: return KeyCommand::RotCcw;
    case KeyCommand::RotCcw: return KeyCommand::RotCw;
    case KeyCommand::AltUp: return KeyCommand::AltDown;
    case KeyCommand::AltDown: return KeyCommand::AltUp;
  }
  return k;
}

}  // namespace

TEST(Keys, Translations) {
  const auto s = at(1000, 1000, 0, 100);  // width 200, step 20
  expect_near(apply_key(field(), kCam, kCtl, s, KeyCommand::Forward).state.position, {1000, 1020});
  expect_near(apply_key(field(), kCam, kCtl, s, KeyCommand::Back).state.position, {1000, 980});
  expect_near(apply_key(field(), kCam, kCtl, s, KeyCommand::Right).state.position, {1020, 1000});
  expect_near(apply_key(field(), kCam, kCtl, s, KeyCommand::Left).state.position, {980, 1000});
  const auto e = at(1000, 1000, 90, 50);  // width 100, step 10
  expect_near(apply_key(field(), kCam, kCtl, e, KeyCommand::Forward).state.position, {1010, 1000});
  expect_near(apply_key(field(), kCam, kCtl, e, KeyCommand::Right).state.position, {1000, 990});
}

TEST(Keys, RotationAndAltitude) {
  const auto s = at(1000, 1000, 350, 100);
  EXPECT_NEAR(apply_key(field(), kCam, kCtl, s, KeyCommand::RotCw).state.heading.degrees(), 5.0, 1e-12);
  EXPECT_NEAR(apply_key(field(), kCam, kCtl, s, KeyCommand::RotCcw).state.heading.degrees(), 335.0, 1e-12);
  EXPECT_NEAR(apply_key(field(), kCam, kCtl, s, KeyCommand::AltUp).state.altitude, 110.0, 1e-12);
  EXPECT_NEAR(apply_key(field(), kCam, kCtl, s, KeyCommand::AltDown).state.altitude, 100.0 / 1.1, 1e-12);
  EXPECT_EQ(apply_key(field(), kCam, kCtl, at(1000, 1000, 0, 480), KeyCommand::AltUp).state.altitude, 500.0);
  EXPECT_EQ(apply_key(field(), kCam, kCtl, at(1000, 1000, 0, 10.5), KeyCommand::AltDown).state.altitude, 10.0);
  for (auto k : {KeyCommand::RotCw, KeyCommand::AltUp}) {
    const auto t = apply_key(field(), kCam, kCtl, s, k);
    EXPECT_EQ(t.state.position, s.position);
  }
}

TEST(Keys, OutOfBoundsIsRejectedWithoutChange) {
  const auto s = at(101, 1000, 270, 50);  // width 100, left edge at x = 51
  const auto t = apply_key(field(), kCam, kCtl, s, KeyCommand::Forward);
  EXPECT_TRUE(t.accepted());
  const auto edge = at(50.5, 1000, 270, 50);
  const auto r = apply_key(field(), kCam, kCtl, edge, KeyCommand::Forward);
  ASSERT_FALSE(r.accepted());
  EXPECT_EQ(*r.rejected, RejectReason::OutOfBounds);
  EXPECT_EQ(r.state, edge);
  // Growing the footprint past the edge is rejected too.
  EXPECT_FALSE(apply_key(field(), kCam, kCtl, edge, KeyCommand::AltUp).accepted());
}

TEST(Keys, Names) {
  for (auto k : kAllKeys) EXPECT_EQ(key_from_string(to_string(k)), k);
  EXPECT_FALSE(key_from_string("jump"));
}

TEST(Keys, InversePairsRestoreState) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> pos(600, 1400), ang(0, 360), alt(11, 300);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto s = at(pos(gen), pos(gen), ang(gen), alt(gen));
    const auto k = kAllKeys[static_cast<std::size_t>(i) % kAllKeys.size()];
    const auto a = apply_key(field(), kCam, kCtl, s, k);
    ASSERT_TRUE(a.accepted());
    const auto b = apply_key(field(), kCam, kCtl, a.state, inverse(k));
    ASSERT_TRUE(b.accepted());
    ASSERT_NEAR(b.state.position.x, s.position.x, 1e-9);
    ASSERT_NEAR(b.state.position.y, s.position.y, 1e-9);
    ASSERT_NEAR(b.state.altitude, s.altitude, 1e-9);
    ASSERT_NEAR(std::abs(rot_delta(s, b.state)), 0.0, 1e-9);
    ++checked;
  }
  EXPECT_EQ(checked, 10000);
}

TEST(Waypoint, CenterKeepsPositionAndHeading) {
  const auto s = at(1000, 1000, 123, 100);
  const auto t = apply_waypoint(field(), kCam, s, {0.5, 0.5, 150});
  ASSERT_TRUE(t.accepted());
  EXPECT_EQ(t.state.position, s.position);
  EXPECT_EQ(t.state.heading, s.heading);
  EXPECT_EQ(t.state.altitude, 150.0);
}

TEST(Waypoint, EdgesOfTheView) {
  const auto s = at(1000, 1000, 0, 100);  // width 200
  auto t = apply_waypoint(field(), kCam, s, {0.5, 1.0, 100});
  expect_near(t.state.position, {1000, 1100});
  EXPECT_NEAR(t.state.heading.degrees(), 0.0, 1e-12);
  t = apply_waypoint(field(), kCam, s, {1.0, 0.5, 100});
  expect_near(t.state.position, {1100, 1000});
  EXPECT_NEAR(t.state.heading.degrees(), 90.0, 1e-9);
  t = apply_waypoint(field(), kCam, s, {0.0, 0.0, 100});
  expect_near(t.state.position, {900, 900});
  EXPECT_NEAR(t.state.heading.degrees(), 225.0, 1e-9);
  // Rotated frame: heading east, "forward" points to +x.
  t = apply_waypoint(field(), kCam, at(1000, 1000, 90, 100), {0.5, 0.75, 100});
  expect_near(t.state.position, {1050, 1000});
}

TEST(Waypoint, ShortMovesHoldHeading) {
  const auto s = at(1000, 1000, 40, 100);
  const auto t = apply_waypoint(field(), kCam, s, {0.5 + 0.4 / 200, 0.5, 100});
  EXPECT_EQ(t.state.heading, s.heading);
  const auto u = apply_waypoint(field(), kCam, s, {0.5 + 0.6 / 200, 0.5, 100});
  EXPECT_NEAR(u.state.heading.degrees(), 130.0, 1e-6);
}

TEST(Waypoint, Validation) {
  const auto s = at(1000, 1000, 0, 100);
  try {
    apply_waypoint(field(), kCam, s, {1.2, 0.5, 100});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  try {
    apply_waypoint(field(), kCam, s, {0.5, 0.5, 600});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AltitudeOutOfRange);
  }
  const auto edge = at(60, 1000, 0, 50);
  const auto r = apply_waypoint(field(), kCam, edge, {0.0, 0.5, 50});
  EXPECT_FALSE(r.accepted());
  EXPECT_EQ(r.state, edge);
}

TEST(Waypoint, WaypointToInvertsTheMapping) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> pos(700, 1300), ang(0, 360), alt(20, 300), u(-0.5, 0.5);
  for (int i = 0; i < 2000; ++i) {
    const auto s = at(pos(gen), pos(gen), ang(gen), alt(gen));
    const auto v = s.view(kCam);
    const WorldPoint target = v.to_world(u(gen) * v.width, u(gen) * v.width);
    const auto w = waypoint_to(kCam, s, target, 80);
    const auto t = propose_waypoint(kCam, s, w);
    ASSERT_NEAR(t.position.x, target.x, 1e-9);
    ASSERT_NEAR(t.position.y, target.y, 1e-9);
  }
}

TEST(RotDelta, Range) {
  EXPECT_DOUBLE_EQ(rot_delta(at(0, 0, 350, 100), at(0, 0, 10, 100)), 20.0);
  EXPECT_DOUBLE_EQ(rot_delta(at(0, 0, 10, 100), at(0, 0, 350, 100)), -20.0);
  EXPECT_DOUBLE_EQ(rot_delta(at(0, 0, 0, 100), at(0, 0, 180, 100)), 180.0);
  EXPECT_DOUBLE_EQ(rot_delta(at(0, 0, 180, 100), at(0, 0, 0, 100)), 180.0);
}
