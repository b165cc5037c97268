#pragma once

// One navigation session: a drone in an environment working on a task,
// driven by agent messages and (in live mode) commander text. Sessions are
// single-owner and process messages in order.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "avdn/metrics.hpp"
#include "avdn/protocol.hpp"

namespace avdn {

enum class Phase { AwaitingInstruction, Navigating, AwaitingAnswer, Claimed, Done };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::AwaitingInstruction: return "AwaitingInstruction";
    case Phase::Navigating: return "Navigating";
    case Phase::AwaitingAnswer: return "AwaitingAnswer";
    case Phase::Claimed: return "Claimed";
    case Phase::Done: return "Done";
  }
  return "?";
}

inline constexpr const char* kNoFurtherInstructionsText = "No further instructions are available.";

struct SessionConfig {
  enum class Mode { Offline, Live };

  CameraModel camera;
  ControlConfig control;
  int resolution = 224;
  Sampling sampling = Sampling::Bilinear;
  int max_steps = 200;
  bool claim_ends_episode = false;  // evaluation: a claim is the stop action
  Mode mode = Mode::Offline;

  void validate() const {
    camera.validate();
    control.validate();
    if (resolution < 8 || resolution > 2048) throw Error(ErrorCode::InvalidArgument, "resolution must be in [8, 2048]");
    if (max_steps < 1) throw Error(ErrorCode::InvalidArgument, "max_steps must be positive");
  }
};

inline nlohmann::json to_json(const SessionConfig& c) {
  return {{"fov_degrees", c.camera.fov_degrees},
          {"min_altitude", c.camera.min_altitude},
          {"max_altitude", c.camera.max_altitude},
          {"step_fraction", c.control.step_fraction},
          {"rot_step", c.control.rot_step},
          {"alt_factor", c.control.alt_factor},
          {"resolution", c.resolution},
          {"sampling", c.sampling == Sampling::Bilinear ? "bilinear" : "nearest"},
          {"max_steps", c.max_steps},
          {"claim_ends_episode", c.claim_ends_episode},
          {"mode", c.mode == SessionConfig::Mode::Offline ? "offline" : "live"}};
}

/// Missing keys keep their defaults.
inline SessionConfig session_config_from_json(const nlohmann::json& j) {
  SessionConfig c;
  c.camera.fov_degrees = j.value("fov_degrees", c.camera.fov_degrees);
  c.camera.min_altitude = j.value("min_altitude", c.camera.min_altitude);
  c.camera.max_altitude = j.value("max_altitude", c.camera.max_altitude);
  c.control.step_fraction = j.value("step_fraction", c.control.step_fraction);
  c.control.rot_step = j.value("rot_step", c.control.rot_step);
  c.control.alt_factor = j.value("alt_factor", c.control.alt_factor);
  c.resolution = j.value("resolution", c.resolution);
  const std::string sampling = j.value("sampling", std::string("bilinear"));
  if (sampling != "bilinear" && sampling != "nearest") throw Error(ErrorCode::InvalidArgument, "sampling: " + sampling);
  c.sampling = sampling == "bilinear" ? Sampling::Bilinear : Sampling::Nearest;
  c.max_steps = j.value("max_steps", c.max_steps);
  c.claim_ends_episode = j.value("claim_ends_episode", c.claim_ends_episode);
  const std::string mode = j.value("mode", std::string("offline"));
  if (mode != "offline" && mode != "live") throw Error(ErrorCode::InvalidArgument, "mode: " + mode);
  c.mode = mode == "offline" ? SessionConfig::Mode::Offline : SessionConfig::Mode::Live;
  c.validate();
  return c;
}

// ---------------------------------------------------------------- tasks

/// Everything a session needs to know about its task. Offline sessions
/// answer questions from `recorded_rounds`.
struct SessionTask {
  TaskInstance task;
  AxisRect destination;
  Split split = Split::Train;
  int start_round = 0;
  std::vector<DialogRound> recorded_rounds;
};

inline SessionTask session_task(const Episode& ep, TaskKind kind, int round_index, const CameraModel& cam) {
  const int m = static_cast<int>(ep.round_count());
  if (round_index < 0 || round_index >= m) {
    throw Error(ErrorCode::IndexOutOfRange, "round " + std::to_string(round_index) + " of " + std::to_string(m));
  }
  SessionTask st;
  st.destination = ep.destination;
  st.split = ep.split;
  st.recorded_rounds = ep.rounds;
  st.task.kind = kind;
  st.task.episode_id = ep.episode_id;
  st.task.env_id = ep.env_id;
  if (kind == TaskKind::ANDH_Full) {
    st.start_round = 0;
    st.task.round_index = m - 1;
    st.task.dialog_context = ep.rounds;
    st.task.start = ep.start;
    st.task.goal = GoalArea(ep.destination);
  } else {
    st.start_round = round_index;
    st.task.round_index = round_index;
    st.task.dialog_context.assign(ep.rounds.begin(), ep.rounds.begin() + round_index + 1);
    st.task.start = ep.sub_trajectories[static_cast<std::size_t>(round_index)].states.front();
    st.task.goal = goal_area(ep, round_index, cam);
  }
  return st;
}

inline std::vector<SessionTask> session_tasks(const std::vector<Episode>& episodes, TaskKind kind,
                                              const CameraModel& cam) {
  std::vector<SessionTask> out;
  for (const auto& ep : episodes) {
    if (kind == TaskKind::ANDH_Full) {
      out.push_back(session_task(ep, kind, 0, cam));
    } else {
      for (int i = 0; i < static_cast<int>(ep.round_count()); ++i) out.push_back(session_task(ep, kind, i, cam));
    }
  }
  return out;
}

/// A live task with a sampled start and destination and no dialog yet.
inline SessionTask sampled_session_task(const EnvironmentBundle& bundle, const CameraModel& cam, std::uint64_t seed) {
  const SampledTask s = sample_task(bundle, cam, seed);
  SessionTask st;
  st.destination = s.destination;
  st.task.kind = TaskKind::ANDH_Full;
  st.task.episode_id = bundle.env.env_id() + "-sampled-" + std::to_string(seed);
  st.task.env_id = bundle.env.env_id();
  st.task.start = s.start;
  st.task.goal = GoalArea(s.destination);
  return st;
}

namespace detail {

inline nlohmann::json round_to_json(const DialogRound& r) {
  nlohmann::json j = {{"T", r.T}, {"commander", r.commander}, {"auto", r.auto_instructions}};
  if (r.follower) j["follower"] = *r.follower;
  return j;
}

inline DialogRound round_from_json(const nlohmann::json& j) {
  DialogRound r{j.at("T").get<int>(), j.at("commander").get<std::string>(), std::nullopt,
                j.at("auto").get<std::vector<std::string>>()};
  if (j.contains("follower")) r.follower = j.at("follower").get<std::string>();
  return r;
}

inline DroneState state_from_plain_json(const nlohmann::json& j) {
  return {{j.at("x").get<double>(), j.at("y").get<double>()},
          Heading(j.at("heading").get<double>()),
          j.at("altitude").get<double>()};
}

}  // namespace detail

inline nlohmann::json to_json(const GoalArea& g) {
  if (g.is_view()) {
    const auto& v = g.view();
    return {{"kind", "view"}, {"x", v.center.x}, {"y", v.center.y}, {"width", v.width}, {"rotation", v.rotation.degrees()}};
  }
  nlohmann::json j = rect_to_json(g.destination());
  j["kind"] = "destination";
  return j;
}

inline GoalArea goal_from_json(const nlohmann::json& j) {
  if (j.at("kind") == "view") {
    return GoalArea(ViewArea{{j.at("x").get<double>(), j.at("y").get<double>()},
                             j.at("width").get<double>(),
                             Heading(j.at("rotation").get<double>())});
  }
  return GoalArea(rect_from_json(j));
}

inline nlohmann::json to_json(const SessionTask& st) {
  nlohmann::json ctx = nlohmann::json::array(), rec = nlohmann::json::array();
  for (const auto& r : st.task.dialog_context) ctx.push_back(detail::round_to_json(r));
  for (const auto& r : st.recorded_rounds) rec.push_back(detail::round_to_json(r));
  return {{"kind", st.task.kind == TaskKind::ANDH ? "andh" : "andh-full"},
          {"episode_id", st.task.episode_id},
          {"env_id", st.task.env_id},
          {"round_index", st.task.round_index},
          {"start_round", st.start_round},
          {"start", to_json(st.task.start)},
          {"goal", to_json(st.task.goal)},
          {"destination", rect_to_json(st.destination)},
          {"split", to_string(st.split)},
          {"dialog_context", std::move(ctx)},
          {"recorded_rounds", std::move(rec)}};
}

inline SessionTask session_task_from_json(const nlohmann::json& j) {
  try {
    SessionTask st;
    st.task.kind = j.at("kind") == "andh" ? TaskKind::ANDH : TaskKind::ANDH_Full;
    st.task.episode_id = j.at("episode_id").get<std::string>();
    st.task.env_id = j.at("env_id").get<std::string>();
    st.task.round_index = j.at("round_index").get<int>();
    st.start_round = j.at("start_round").get<int>();
    st.task.start = detail::state_from_plain_json(j.at("start"));
    st.task.goal = goal_from_json(j.at("goal"));
    st.destination = rect_from_json(j.at("destination"));
    st.split = split_from_string(j.at("split").get<std::string>()).value_or(Split::Train);
    for (const auto& r : j.at("dialog_context")) st.task.dialog_context.push_back(detail::round_from_json(r));
    for (const auto& r : j.at("recorded_rounds")) st.recorded_rounds.push_back(detail::round_from_json(r));
    return st;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed session task: ") + e.what());
  }
}

// ---------------------------------------------------------------- trace

/// Inputs a session received, in order. Replaying them against a fresh
/// session reproduces its outputs.
struct TraceEntry {
  enum class Kind { Begin, Agent, Commander };
  Kind kind = Kind::Begin;
  nlohmann::json payload;  // AgentMessage JSON or commander text
};

struct Trace {
  SessionConfig config;
  SessionTask task;
  std::vector<TraceEntry> entries;
};

inline nlohmann::json to_json(const Trace& t) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : t.entries) {
    switch (e.kind) {
      case TraceEntry::Kind::Begin: entries.push_back({{"begin", true}}); break;
      case TraceEntry::Kind::Agent: entries.push_back({{"agent", e.payload}}); break;
      case TraceEntry::Kind::Commander: entries.push_back({{"commander", e.payload}}); break;
    }
  }
  return {{"config", to_json(t.config)}, {"task", to_json(t.task)}, {"entries", std::move(entries)}};
}

inline Trace trace_from_json(const nlohmann::json& j) {
  Trace t{session_config_from_json(j.at("config")), session_task_from_json(j.at("task")), {}};
  for (const auto& e : j.at("entries")) {
    if (e.contains("agent")) {
      t.entries.push_back({TraceEntry::Kind::Agent, e.at("agent")});
    } else if (e.contains("commander")) {
      t.entries.push_back({TraceEntry::Kind::Commander, e.at("commander")});
    } else {
      t.entries.push_back({TraceEntry::Kind::Begin, nullptr});
    }
  }
  return t;
}

// ---------------------------------------------------------------- session

class Session {
 public:
  Session(std::shared_ptr<const EnvironmentBundle> env, SessionTask task, SessionConfig cfg)
      : env_(std::move(env)), task_(std::move(task)), cfg_(cfg), drone_(task_.task.start) {
    cfg_.validate();
    if (!env_) throw Error(ErrorCode::InvalidArgument, "session needs an environment");
    if (!cfg_.camera.altitude_in_range(drone_.altitude)) {
      throw Error(ErrorCode::AltitudeOutOfRange, "start altitude outside camera range");
    }
    if (!in_bounds(env_->env, drone_.view(cfg_.camera))) throw Error(ErrorCode::OutOfBounds, "start view out of bounds");
    trace_.config = cfg_;
    trace_.task = task_;
    history_.push_back(drone_);
  }

  Phase phase() const { return phase_; }
  const DroneState& drone() const { return drone_; }
  int step_count() const { return step_count_; }
  int round() const { return round_; }
  const SessionConfig& config() const { return cfg_; }
  const SessionTask& task() const { return task_; }
  const EnvironmentBundle& environment() const { return *env_; }
  const std::vector<AttentionClick>& clicks() const { return clicks_; }
  const std::vector<DialogRound>& transcript() const { return rounds_; }
  const std::vector<SubTrajectory>& sub_trajectories() const { return subs_; }
  const Trace& trace() const { return trace_; }
  std::optional<bool> outcome() const { return outcome_; }

  /// Drone state after each counted step; [0] is the task start.
  const std::vector<DroneState>& history() const { return history_; }

  /// Delivers the dialog context. Live sessions without context wait for
  /// the commander instead.
  std::vector<proto::SimMessage> begin() {
    if (begun_) throw Error(ErrorCode::ProtocolViolation, "session already started");
    begun_ = true;
    trace_.entries.push_back({TraceEntry::Kind::Begin, nullptr});
    const auto& ctx = task_.task.dialog_context;
    if (ctx.empty()) {
      if (cfg_.mode == SessionConfig::Mode::Offline) {
        throw Error(ErrorCode::InvalidArgument, "offline sessions need a dialog context");
      }
      return {};
    }
    std::vector<proto::SimMessage> out;
    const int last = static_cast<int>(ctx.size()) - 1;
    for (int r = 0; r <= last; ++r) {
      const auto& d = ctx[static_cast<std::size_t>(r)];
      out.push_back(proto::Dialog{"commander", d.commander, r});
      if (r < last) {
        if (d.follower) out.push_back(proto::Dialog{"follower", *d.follower, r});
        for (const auto& a : d.auto_instructions) out.push_back(proto::AutoInstruction{a});
      }
    }
    for (int r = 0; r < task_.start_round; ++r) {
      rounds_.push_back(ctx[static_cast<std::size_t>(r)]);
      subs_.push_back({r, {drone_}});
    }
    round_ = task_.start_round;
    open_round(ctx[static_cast<std::size_t>(round_)].commander);
    phase_ = Phase::Navigating;
    out.push_back(observation());
    return out;
  }

  /// Live mode: the commander's initial instruction or an answer.
  std::vector<proto::SimMessage> commander(const std::string& text) {
    if (text.empty()) throw Error(ErrorCode::InvalidArgument, "empty commander text");
    if (cfg_.mode != SessionConfig::Mode::Live) {
      throw Error(ErrorCode::ProtocolViolation, "commander input is only accepted in live mode");
    }
    if (phase_ == Phase::AwaitingInstruction && begun_ && rounds_.empty()) {
      trace_.entries.push_back({TraceEntry::Kind::Commander, text});
      round_ = 0;
      open_round(text);
      phase_ = Phase::Navigating;
      return {proto::Dialog{"commander", text, 0}, observation()};
    }
    if (phase_ != Phase::AwaitingAnswer) {
      throw Error(ErrorCode::ProtocolViolation, "no question is waiting for an answer");
    }
    trace_.entries.push_back({TraceEntry::Kind::Commander, text});
    return answer(text);
  }

  /// Applies one agent message. Throws ProtocolViolation for messages that
  /// are illegal in the current phase; only the trace records them.
  std::vector<proto::SimMessage> step(const proto::AgentMessage& msg) {
    trace_.entries.push_back({TraceEntry::Kind::Agent, proto::to_json(msg)});
    check_legal(msg);
    return std::visit([this](const auto& m) { return apply(m); }, msg);
  }

  /// Like step, but reports errors as an Error message.
  std::vector<proto::SimMessage> handle(const proto::AgentMessage& msg) {
    try {
      return step(msg);
    } catch (const Error& e) {
      return {proto::ErrorMsg{std::string(to_string(e.code())), e.what()}};
    }
  }

  proto::Observation observation() const { return observation_at(step_count_); }

  proto::Observation observation_at(int step) const {
    if (step < 0 || step >= static_cast<int>(history_.size())) {
      throw Error(ErrorCode::IndexOutOfRange, "no observation for step " + std::to_string(step));
    }
    const DroneState& s = history_[static_cast<std::size_t>(step)];
    const ViewArea v = s.view(cfg_.camera);
    proto::Observation o;
    o.step = step;
    o.compass_deg = s.heading.degrees();
    o.altitude_m = s.altitude;
    o.round = round_;
    o.phase = std::string(to_string(phase_));
    o.image = std::make_shared<const Image>(observe(env_->env, v, cfg_.resolution, cfg_.sampling).image);
    const double r = cfg_.resolution;
    for (const auto& c : clicks_) {
      const auto [px, py] = world_to_view_pixel(v, cfg_.resolution, c.world_point);
      const double rp = c.radius() / v.width * r;
      if (px < -rp || py < -rp || px > r + rp || py > r + rp) continue;
      o.attention.push_back({px, py, rp});
    }
    return o;
  }

  /// Scores the flown trajectory against the task goal.
  EpisodeResult result() const { return make_result(task_.task, history_, cfg_.camera); }

  nlohmann::json metrics() const {
    const EpisodeResult r = result();
    nlohmann::json j = {{"success_eval", r.success},
                        {"path_length", r.path_length},
                        {"goal_distance_start", r.goal_distance_start},
                        {"goal_distance_final", r.goal_distance_final},
                        {"gp_literal", goal_progress(r, GpMode::PaperLiteral)},
                        {"gp_delta", goal_progress(r, GpMode::DeltaDistance)},
                        {"steps", step_count_}};
    j["spl"] = r.goal_distance_start > 0.0 ? nlohmann::json(spl_term(r)) : nlohmann::json(nullptr);
    return j;
  }

  /// The session as a dataset episode (rounds and sub-trajectories so far).
  Episode transcript_episode(std::string episode_id) const {
    Episode ep;
    ep.episode_id = std::move(episode_id);
    ep.env_id = task_.task.env_id;
    ep.split = task_.split;
    ep.start = task_.task.start;
    ep.destination = task_.destination;
    ep.rounds = rounds_;
    ep.sub_trajectories = subs_;
    ep.attention_clicks = clicks_;
    if (outcome_) ep.success = *outcome_;
    return ep;
  }

 private:
  void open_round(const std::string& commander_text) {
    rounds_.push_back({round_, commander_text, std::nullopt, {}});
    subs_.push_back({round_, {drone_}});
  }

  void check_legal(const proto::AgentMessage& msg) const {
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::ProtocolViolation,
                  std::string(proto::to_json(msg).at("type").get<std::string>()) + " not allowed: " + why);
    };
    if (phase_ == Phase::Done) fail("the episode is over");
    if (phase_ == Phase::AwaitingInstruction) fail("waiting for the initial instruction");
    const bool navigating = phase_ == Phase::Navigating;
    if (std::holds_alternative<proto::Key>(msg) || std::holds_alternative<proto::Waypoint>(msg) ||
        std::holds_alternative<proto::Claim>(msg)) {
      if (!navigating) fail("phase is " + std::string(to_string(phase_)));
    }
    if (const auto* w = std::get_if<proto::Waypoint>(&msg)) validate_waypoint(cfg_.camera, w->w);
    if (const auto* q = std::get_if<proto::Question>(&msg)) {
      if (q->text.empty()) fail("empty question");
      const bool hinted = phase_ == Phase::AwaitingAnswer && !rounds_.back().follower;
      if (!navigating && !hinted) fail("a question is already pending");
    }
    auto check_pixel = [&](double px, double py) {
      if (!(px >= 0 && py >= 0 && px <= cfg_.resolution && py <= cfg_.resolution)) {
        fail("pixel outside the observation");
      }
    };
    if (const auto* c = std::get_if<proto::AttentionClick>(&msg)) check_pixel(c->px, c->py);
    if (const auto* c = std::get_if<proto::AttentionRemove>(&msg)) check_pixel(c->px, c->py);
  }

  // Counts a step and returns true when the horizon is exhausted.
  bool count_step() {
    ++step_count_;
    history_.push_back(drone_);
    return step_count_ >= cfg_.max_steps;
  }

  std::vector<proto::SimMessage> finish(bool success) {
    phase_ = Phase::Done;
    outcome_ = success;
    return {proto::EpisodeEnd{success, metrics()}};
  }

  std::vector<proto::SimMessage> moved(const Transition& t) {
    if (!t.accepted()) {
      if (count_step()) return finish(false);
      return {proto::ActionRejected{std::string(to_string(*t.rejected))}};
    }
    drone_ = t.state;
    subs_.back().states.push_back(drone_);
    if (count_step()) return finish(false);
    return {observation()};
  }

  std::vector<proto::SimMessage> apply(const proto::Key& k) {
    return moved(apply_key(env_->env, cfg_.camera, cfg_.control, drone_, k.key));
  }

  std::vector<proto::SimMessage> apply(const proto::Waypoint& w) {
    return moved(apply_waypoint(env_->env, cfg_.camera, drone_, w.w));
  }

  std::vector<proto::SimMessage> apply(const proto::Question& q) {
    rounds_.back().follower = q.text;
    phase_ = Phase::AwaitingAnswer;
    if (count_step()) return finish(false);
    return offline_answer({});
  }

  std::vector<proto::SimMessage> apply(const proto::Claim&) {
    phase_ = Phase::Claimed;
    const AutoInstruction ai = auto_instruction(drone_.view(cfg_.camera), task_.task.goal.reference_rect());
    std::vector<proto::SimMessage> out;
    if (ai.kind == AutoKind::Success) {
      rounds_.back().auto_instructions.push_back(ai.text);
      out.push_back(proto::AutoInstruction{ai.text});
      ++step_count_;
      history_.push_back(drone_);
      auto end = finish(true);
      out.insert(out.end(), end.begin(), end.end());
      return out;
    }
    if (cfg_.claim_ends_episode) {
      ++step_count_;
      history_.push_back(drone_);
      return finish(false);
    }
    if (count_step()) return finish(false);
    if (ai.kind == AutoKind::AltitudeHint) {
      rounds_.back().auto_instructions.push_back(ai.text);
      phase_ = Phase::Navigating;
      return {proto::AutoInstruction{ai.text}, observation()};
    }
    rounds_.back().auto_instructions.push_back(kAskHintText);
    phase_ = Phase::AwaitingAnswer;
    out.push_back(proto::AutoInstruction{kAskHintText});
    return offline_answer(std::move(out), true);
  }

  std::vector<proto::SimMessage> apply(const proto::AttentionClick& c) {
    clicks_.push_back(click_from_pixel(drone_.view(cfg_.camera), cfg_.resolution, c.px, c.py));
    return {observation()};
  }

  std::vector<proto::SimMessage> apply(const proto::AttentionRemove& c) {
    const WorldPoint p = click_from_pixel(drone_.view(cfg_.camera), cfg_.resolution, c.px, c.py).world_point;
    clicks_ = remove_click(std::move(clicks_), p);
    return {observation()};
  }

  // Offline sessions answer from the recorded dialog right away. Live
  // sessions wait for the commander; after an auto-hint the follower gets a
  // fresh observation so it can ask.
  std::vector<proto::SimMessage> offline_answer(std::vector<proto::SimMessage> out, bool after_hint = false) {
    if (cfg_.mode == SessionConfig::Mode::Live) {
      if (after_hint) out.push_back(observation());
      return out;
    }
    const auto next = static_cast<std::size_t>(round_) + 1;
    if (next < task_.recorded_rounds.size()) {
      auto a = answer(task_.recorded_rounds[next].commander);
      out.insert(out.end(), a.begin(), a.end());
      return out;
    }
    rounds_.back().auto_instructions.push_back(kNoFurtherInstructionsText);
    phase_ = Phase::Navigating;
    out.push_back(proto::AutoInstruction{kNoFurtherInstructionsText});
    out.push_back(observation());
    return out;
  }

  std::vector<proto::SimMessage> answer(const std::string& text) {
    ++round_;
    open_round(text);
    phase_ = Phase::Navigating;
    return {proto::Dialog{"commander", text, round_}, observation()};
  }

  std::shared_ptr<const EnvironmentBundle> env_;
  SessionTask task_;
  SessionConfig cfg_;
  DroneState drone_;
  Phase phase_ = Phase::AwaitingInstruction;
  bool begun_ = false;
  int step_count_ = 0;
  int round_ = 0;
  std::vector<DroneState> history_;
  std::vector<DialogRound> rounds_;
  std::vector<SubTrajectory> subs_;
  std::vector<AttentionClick> clicks_;
  std::optional<bool> outcome_;
  Trace trace_;
};

/// Re-executes a trace against a fresh session and returns every output
/// message in order.
inline std::vector<proto::SimMessage> replay_trace(std::shared_ptr<const EnvironmentBundle> env, const Trace& trace) {
  Session s(std::move(env), trace.task, trace.config);
  std::vector<proto::SimMessage> out;
  auto append = [&](std::vector<proto::SimMessage> msgs) { out.insert(out.end(), msgs.begin(), msgs.end()); };
  for (const auto& e : trace.entries) {
    switch (e.kind) {
      case TraceEntry::Kind::Begin: append(s.begin()); break;
      case TraceEntry::Kind::Agent: append(s.handle(proto::agent_message_from_json(e.payload))); break;
      case TraceEntry::Kind::Commander: append(s.commander(e.payload.get<std::string>())); break;
    }
  }
  return out;
}

}  // namespace avdn
