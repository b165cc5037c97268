#include <gtest/gtest.h>

#include "avdn/agents.hpp"
#include "fixtures.hpp"

using namespace avdn;
namespace p = avdn::proto;

namespace {

Session offline_session(const SessionTask& st, SessionConfig cfg = {}) {
  cfg.mode = SessionConfig::Mode::Offline;
  return Session(fixture::shared_world(), st, cfg);
}

std::string dump_all(const std::vector<p::SimMessage>& msgs) {
  std::string s;
  for (const auto& m : msgs) s += p::to_json(m, p::inline_images()).dump() + "\n";
  return s;
}

}  // namespace

TEST(ShortcutQuestions, DefaultsAndCustomLists) {
  EXPECT_EQ(shortcut_questions(), (std::vector<std::string>{"where should I go?", "could you further explain it?"}));
  EXPECT_TRUE(shortcut_questions(std::vector<std::string>{}).empty());
  EXPECT_EQ(shortcut_questions(std::vector<std::string>{"left?"}).size(), 1u);
}

TEST(OracleAgent, ReplaysAndhFullExactly) {
  const CameraModel cam;
  for (const auto& ep : fixture::corpus()) {
    const SessionTask st = session_task(ep, TaskKind::ANDH_Full, 0, cam);
    Session s = offline_session(st);
    OracleAgent oracle(ep, cam);
    const SessionRun run = drive(s, oracle);
    ASSERT_TRUE(run.ended) << ep.episode_id;
    EXPECT_TRUE(run.claimed_success) << ep.episode_id;
    EXPECT_TRUE(run.result.success) << ep.episode_id;
    EXPECT_LT(oracle.max_deviation(), 1e-6);
    EXPECT_EQ(s.round(), static_cast<int>(ep.round_count()) - 1);
  }
}

TEST(OracleAgent, ReplaysEveryAndhRound) {
  const CameraModel cam;
  for (const auto& st : session_tasks({fixture::corpus().begin(), fixture::corpus().begin() + 10}, TaskKind::ANDH, cam)) {
    const auto& ep = *std::find_if(fixture::corpus().begin(), fixture::corpus().end(),
                                   [&](const Episode& e) { return e.episode_id == st.task.episode_id; });
    Session s = offline_session(st);
    OracleAgent oracle(ep, cam);
    const SessionRun run = drive(s, oracle);
    EXPECT_TRUE(run.claimed_success) << st.task.episode_id << " round " << st.start_round;
  }
}

TEST(OracleAgent, TruncatedEpisodeScoresIndependently) {
  const CameraModel cam;
  Episode ep = fixture::corpus().front();
  ep.sub_trajectories.back().states.resize(1);
  const SessionTask st = session_task(ep, TaskKind::ANDH_Full, 0, cam);
  SessionConfig cfg;
  cfg.claim_ends_episode = true;
  Session s = offline_session(st, cfg);
  OracleAgent oracle(ep, cam);
  const SessionRun run = drive(s, oracle);
  ASSERT_TRUE(run.ended);
  const bool expected = check_success(ep.sub_trajectories.back().states.back().view(cam), ep.destination, SuccessMode::Eval);
  EXPECT_EQ(run.result.success, expected);
}

TEST(OracleAgent, DivergenceIsDetected) {
  const CameraModel cam;
  const Episode& ep = fixture::corpus().front();
  Episode shifted = ep;
  for (auto& sub : shifted.sub_trajectories) {
    for (auto& state : sub.states) state.position.x += 0.5;
  }
  // The session flies from the true start; the oracle expects shifted states.
  Session s = offline_session(session_task(ep, TaskKind::ANDH_Full, 0, cam));
  OracleAgent oracle(shifted, cam);
  try {
    drive(s, oracle);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ReplayDivergence);
  }
}

TEST(OracleAgent, RefusesOtherEpisodes) {
  const CameraModel cam;
  OracleAgent oracle(fixture::corpus()[0], cam);
  EXPECT_THROW(oracle.begin(session_task(fixture::corpus()[1], TaskKind::ANDH_Full, 0, cam)), Error);
}

TEST(Baselines, StationaryClaimsImmediately) {
  const CameraModel cam;
  SessionConfig cfg;
  cfg.claim_ends_episode = true;
  Session s = offline_session(session_task(fixture::corpus()[0], TaskKind::ANDH_Full, 0, cam), cfg);
  StationaryAgent agent;
  const SessionRun run = drive(s, agent);
  EXPECT_TRUE(run.ended);
  EXPECT_EQ(s.step_count(), 1);
  EXPECT_DOUBLE_EQ(run.result.path_length, 0.0);
}

TEST(Baselines, RandomAgentIsDeterministicPerSeed) {
  const CameraModel cam;
  SessionConfig cfg;
  cfg.claim_ends_episode = true;
  const SessionTask st = session_task(fixture::corpus()[2], TaskKind::ANDH_Full, 0, cam);
  auto run_with = [&](std::uint64_t seed) {
    Session s = offline_session(st, cfg);
    RandomAgent agent(seed, cam);
    const SessionRun run = drive(s, agent, true);
    EXPECT_TRUE(run.ended);
    EXPECT_GE(s.step_count(), 6);
    EXPECT_LE(s.step_count(), 31);
    return dump_all(run.messages);
  };
  EXPECT_EQ(run_with(5), run_with(5));
  EXPECT_NE(run_with(5), run_with(6));
}

TEST(RemoteAgent, SpeaksFramedStdio) {
  const CameraModel cam;
  SessionConfig cfg;
  cfg.claim_ends_episode = true;
  Session s = offline_session(session_task(fixture::corpus()[0], TaskKind::ANDH_Full, 0, cam), cfg);
  RemoteAgent agent(std::string("python3 ") + AVDN_TOOLS_DIR + "/example_agent.py 2");
  const SessionRun run = drive(s, agent);
  EXPECT_TRUE(run.ended);
  EXPECT_EQ(s.step_count(), 3);
  EXPECT_EQ(s.history().size(), 4u);
}

TEST(RemoteAgent, GarbageOutputIsViolation) {
  const CameraModel cam;
  Session s = offline_session(session_task(fixture::corpus()[0], TaskKind::ANDH_Full, 0, cam));
  RemoteAgent agent("cat >/dev/null & printf '\\000\\000\\000\\002hi'");
  try {
    drive(s, agent);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProtocolViolation);
  }
}
