#pragma once

// Reference agents and the loop that drives an agent through a session.

#include <csignal>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "avdn/session.hpp"

namespace avdn {

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual void begin(const SessionTask&) {}
  /// Next message, given everything received since the previous one.
  virtual proto::AgentMessage act(std::span<const proto::SimMessage> received) = 0;
  virtual void end(std::span<const proto::SimMessage>) {}
  /// Privileged hook: the drone state after each reply. Only the replay
  /// oracle looks at it.
  virtual void observe_state(const DroneState&) {}
};

inline constexpr const char* kShortcutWhereToGo = "where should I go?";
inline constexpr const char* kShortcutExplain = "could you further explain it?";

/// Canned questions offered by the follower console. An empty custom list
/// stays empty.
inline std::vector<std::string> shortcut_questions(const std::optional<std::vector<std::string>>& custom = std::nullopt) {
  if (custom) return *custom;
  return {kShortcutWhereToGo, kShortcutExplain};
}

// ---------------------------------------------------------------- oracle

/// Replays a recorded episode: one waypoint per recorded state, the
/// recorded follower question at each round boundary (ANDH-Full), then a
/// claim.
class OracleAgent : public Agent {
 public:
  static constexpr double kTolerance = 1e-6;

  OracleAgent(Episode episode, CameraModel cam) : ep_(std::move(episode)), cam_(cam) {}

  std::string name() const override { return "oracle"; }

  void begin(const SessionTask& st) override {
    if (st.task.episode_id != ep_.episode_id) throw Error(ErrorCode::InvalidArgument, "oracle bound to another episode");
    plan_.clear();
    max_deviation_ = 0.0;
    const int first = st.start_round;
    const int last = st.task.kind == TaskKind::ANDH_Full ? static_cast<int>(ep_.round_count()) - 1 : first;
    if (ep_.sub_trajectories.empty()) throw Error(ErrorCode::InvalidArgument, "episode has no recorded states");
    for (int r = first; r <= last; ++r) {
      const auto& states = ep_.sub_trajectories[static_cast<std::size_t>(r)].states;
      for (std::size_t k = 1; k < states.size(); ++k) plan_.push_back({Step::Move, states[k - 1], states[k]});
      if (r < last) {
        const auto& q = ep_.rounds[static_cast<std::size_t>(r)].follower;
        plan_.push_back({Step::Ask, states.back(), states.back(), q.value_or(kShortcutWhereToGo)});
      }
    }
    const auto& tail = ep_.sub_trajectories[static_cast<std::size_t>(last)].states.back();
    plan_.push_back({Step::Claim, tail, tail});
    expected_ = st.task.start;
  }

  proto::AgentMessage act(std::span<const proto::SimMessage>) override {
    if (plan_.empty()) return proto::Claim{};
    Step s = std::move(plan_.front());
    plan_.pop_front();
    expected_ = s.to;
    switch (s.kind) {
      case Step::Move: return proto::Waypoint{waypoint_to(cam_, s.from, s.to.position, s.to.altitude)};
      case Step::Ask: return proto::Question{s.text};
      case Step::Claim: break;
    }
    return proto::Claim{};
  }

  void observe_state(const DroneState& s) override {
    const double d = distance(s.position, expected_.position);
    max_deviation_ = std::max(max_deviation_, d);
    if (d > kTolerance || std::abs(s.altitude - expected_.altitude) > kTolerance) {
      throw Error(ErrorCode::ReplayDivergence, "replayed center deviates by " + std::to_string(d) + " m");
    }
  }

  double max_deviation() const { return max_deviation_; }

 private:
  struct Step {
    enum Kind { Move, Ask, Claim } kind;
    DroneState from, to;
    std::string text;
  };

  Episode ep_;
  CameraModel cam_;
  std::deque<Step> plan_;
  DroneState expected_;
  double max_deviation_ = 0.0;
};

// ---------------------------------------------------------------- baselines

/// Uniform random waypoints, then a claim after k ~ U{5..30} actions.
class RandomAgent : public Agent {
 public:
  RandomAgent(std::uint64_t seed, CameraModel cam) : rng_(seed), cam_(cam) {}

  std::string name() const override { return "random"; }

  void begin(const SessionTask&) override {
    remaining_ = static_cast<int>(rng_.uniform_int(5, 30));
  }

  proto::AgentMessage act(std::span<const proto::SimMessage>) override {
    if (remaining_ <= 0) return proto::Claim{};
    --remaining_;
    const double x = rng_.uniform(), y = rng_.uniform();
    return proto::Waypoint{{x, y, rng_.uniform(cam_.min_altitude, cam_.max_altitude)}};
  }

 private:
  Rng rng_;
  CameraModel cam_;
  int remaining_ = 0;
};

class StationaryAgent : public Agent {
 public:
  std::string name() const override { return "stationary"; }
  proto::AgentMessage act(std::span<const proto::SimMessage>) override { return proto::Claim{}; }
};

// ---------------------------------------------------------------- remote

/// An agent in another process, speaking framed JSON over its stdin/stdout.
/// It receives every simulator message and answers each Observation,
/// ActionRejected or Error with one agent message.
class RemoteAgent : public Agent {
 public:
  explicit RemoteAgent(const std::string& command) {
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) throw Error(ErrorCode::IoError, "pipe failed");
    pid_ = ::fork();
    if (pid_ < 0) throw Error(ErrorCode::IoError, "fork failed");
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    out_ = to_child[1];
    in_ = from_child[0];
    std::signal(SIGPIPE, SIG_IGN);
  }

  RemoteAgent(const RemoteAgent&) = delete;
  RemoteAgent& operator=(const RemoteAgent&) = delete;

  ~RemoteAgent() override {
    ::close(out_);
    ::close(in_);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

  std::string name() const override { return "remote"; }

  proto::AgentMessage act(std::span<const proto::SimMessage> received) override {
    send(received);
    auto j = proto::read_frame(in_);
    if (!j) throw Error(ErrorCode::ProtocolViolation, "remote agent closed its output");
    return proto::agent_message_from_json(*j);
  }

  void end(std::span<const proto::SimMessage> received) override { send(received); }

 private:
  void send(std::span<const proto::SimMessage> msgs) {
    const auto enc = proto::inline_images();
    for (const auto& m : msgs) {
      if (!proto::write_frame(out_, proto::to_json(m, enc))) {
        throw Error(ErrorCode::ProtocolViolation, "remote agent closed its input");
      }
    }
  }

  pid_t pid_ = -1;
  int out_ = -1, in_ = -1;
};

// ---------------------------------------------------------------- driver

struct SessionRun {
  bool claimed_success = false;
  bool ended = false;
  EpisodeResult result;
  std::vector<proto::SimMessage> messages;  // every simulator output in order
};

/// Runs `agent` until the episode ends or it stops being asked to act.
inline SessionRun drive(Session& session, Agent& agent, bool keep_messages = false) {
  SessionRun run;
  agent.begin(session.task());
  std::vector<proto::SimMessage> batch = session.begin();
  agent.observe_state(session.drone());
  for (;;) {
    if (keep_messages) run.messages.insert(run.messages.end(), batch.begin(), batch.end());
    if (!batch.empty()) {
      if (const auto* end = std::get_if<proto::EpisodeEnd>(&batch.back())) {
        run.ended = true;
        run.claimed_success = end->success;
        agent.end(batch);
        break;
      }
    }
    if (batch.empty() || !proto::awaits_action(batch.back())) break;
    batch = session.handle(agent.act(batch));
    agent.observe_state(session.drone());
  }
  run.result = session.result();
  return run;
}

}  // namespace avdn
