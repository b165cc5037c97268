#include <gtest/gtest.h>

#include <random>

#include "avdn/metrics.hpp"

using namespace avdn;

namespace {

const CameraModel kCam;

DroneState at(double x, double y, double heading, double alt) { return {{x, y}, Heading(heading), alt}; }

TaskInstance task_to(AxisRect dest, DroneState start) {
  TaskInstance t;
  t.episode_id = "t";
  t.start = start;
  t.goal = GoalArea(dest);
  return t;
}

EpisodeResult result(bool success, double path, double d0, double d1) {
  EpisodeResult r;
  r.success = success;
  r.path_length = path;
  r.goal_distance_start = d0;
  r.goal_distance_final = d1;
  return r;
}

}  // namespace

TEST(Metrics, HandComputedAggregates) {
  const std::vector<EpisodeResult> rs{result(true, 200, 100, 5), result(true, 80, 100, 0), result(false, 50, 100, 60),
                                      result(false, 0, 40, 40)};
  EXPECT_DOUBLE_EQ(success_rate(rs), 0.5);
  // 100/200 + 100/max(80,100) = 1.5 over 4
  EXPECT_DOUBLE_EQ(spl(rs), 0.375);
  EXPECT_DOUBLE_EQ(goal_progress(rs[0]), 195.0);
  EXPECT_DOUBLE_EQ(goal_progress(rs[0], GpMode::DeltaDistance), 95.0);
  EXPECT_DOUBLE_EQ(goal_progress(rs[3]), -40.0);
  EXPECT_DOUBLE_EQ(goal_progress(rs[3], GpMode::DeltaDistance), 0.0);
}

TEST(Metrics, Errors) {
  try {
    success_rate({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyResults);
  }
  EXPECT_THROW(spl({}), Error);
  const std::vector<EpisodeResult> degenerate{result(true, 10, 0, 0)};
  try {
    spl(degenerate);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateReference);
  }
  const std::vector<TaskInstance> tasks(2);
  const std::vector<std::vector<DroneState>> trajs(1);
  try {
    evaluate_run(tasks, trajs, kCam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ArityMismatch);
  }
}

TEST(Metrics, SplNeverExceedsSuccessRate) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EpisodeResult> rs;
    const int n = 1 + static_cast<int>(u(gen) * 30);
    for (int i = 0; i < n; ++i) {
      const double d0 = 1 + 1000 * u(gen);
      rs.push_back(result(u(gen) < 0.5, d0 * (0.5 + 2 * u(gen)), d0, 100 * u(gen)));
    }
    const double s = spl(rs);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, success_rate(rs) + 1e-12);
  }
}

TEST(Metrics, StationaryTrajectory) {
  const AxisRect dest{{500, 500}, {540, 540}};
  const auto t = task_to(dest, at(520, 20, 0, 100));
  const auto r = make_result(t, {}, kCam);
  EXPECT_FALSE(r.success);
  EXPECT_DOUBLE_EQ(r.path_length, 0.0);
  EXPECT_DOUBLE_EQ(goal_progress(r), -500.0);
  EXPECT_DOUBLE_EQ(spl_term(r), 0.0);
}

TEST(Metrics, PerfectStraightFlight) {
  const AxisRect dest{{500, 500}, {540, 540}};
  const auto start = at(520, 100, 0, 100);
  const auto t = task_to(dest, start);
  const auto r = make_result(t, {start, at(520, 300, 0, 100), at(520, 520, 0, 20)}, kCam);
  EXPECT_TRUE(r.success);
  EXPECT_NEAR(spl_term(r), 1.0, 1e-12);
  EXPECT_NEAR(goal_progress(r), 420.0, 1e-12);
}

TEST(Metrics, EvaluateRunWithAttention) {
  const AxisRect dest{{500, 500}, {540, 540}};
  const std::vector<TaskInstance> tasks{task_to(dest, at(520, 100, 0, 100)), task_to(dest, at(100, 520, 0, 100))};
  const std::vector<std::vector<DroneState>> trajs{{tasks[0].start, at(520, 520, 0, 20)}, {}};
  AttentionMask truth{2, {0, 0, 0, 1}, {}};
  AttentionMask empty{2, {0, 0, 0, 0}, {}};
  const std::vector<AttentionPrediction> att{{{2, {0, 0, 0, 1}}, truth}, {{2, {1, 2, 3, 4}}, empty}};
  const auto rep = evaluate_run(tasks, trajs, kCam, GpMode::PaperLiteral, att);
  EXPECT_EQ(rep.n, 2u);
  EXPECT_DOUBLE_EQ(rep.sr, 0.5);
  ASSERT_TRUE(rep.nss_mean);
  EXPECT_NEAR(*rep.nss_mean, std::sqrt(3.0), 1e-12);
  const auto j = to_json(rep, true);
  EXPECT_EQ(j["per_episode"].size(), 2u);
  EXPECT_EQ(j["gp_mode"], "paper_literal");
  EXPECT_EQ(j["per_episode"][1]["states"].size(), 1u);
}

TEST(ProgressTarget, IsIouWithTheDestination) {
  const AxisRect dest{{0, 0}, {10, 10}};
  EXPECT_DOUBLE_EQ(progress_target({{5, 5}, 10, Heading(0)}, dest), 1.0);
  EXPECT_DOUBLE_EQ(progress_target({{100, 100}, 10, Heading(0)}, dest), 0.0);
}

TEST(StopRule, DefaultAndConfigured) {
  EXPECT_TRUE(should_stop(0.5));
  EXPECT_FALSE(should_stop(0.49));
  const StopConfig below{0.3, StopConfig::When::Below};
  EXPECT_TRUE(should_stop(0.2, below));
  EXPECT_FALSE(should_stop(0.3, below));
  EXPECT_THROW(should_stop(1.5), Error);
}

TEST(NavLoss, ZeroForIdenticalPredictions) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 1), alt(10, 500), ang(0, 360);
  for (int i = 0; i < 500; ++i) {
    const Waypoint w{u(gen), u(gen), alt(gen)};
    const double g = u(gen);
    const auto l = nav_loss(w, w, g, g, at(1000, 1000, ang(gen), alt(gen)), kCam);
    EXPECT_EQ(l.total, 0.0);
  }
}

TEST(NavLoss, HandComputed) {
  const auto ctx = at(1000, 1000, 0, 100);
  // East target turns the drone to 90 degrees; north target keeps 0.
  const Waypoint east{1.0, 0.5, 100}, north{0.5, 1.0, 100};
  const auto l = nav_loss(east, north, 0.7, 0.2, ctx, kCam);
  EXPECT_NEAR(l.rotation, 0.25, 1e-12);
  EXPECT_NEAR(l.waypoint, (0.25 + 0.25) / 3.0, 1e-12);
  EXPECT_NEAR(l.progress, 0.25, 1e-12);
  EXPECT_NEAR(l.total, 0.5 + 1.0 / 6.0, 1e-12);
  const auto h = nav_loss({0.5, 0.5, 300}, {0.5, 0.5, 100}, 0, 0, ctx, kCam);
  EXPECT_NEAR(h.waypoint, (0.4 * 0.4) / 3.0, 1e-12);
  EXPECT_EQ(h.rotation, 0.0);
}
