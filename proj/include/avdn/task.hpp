#pragma once

// Task construction on top of recorded episodes: goal selection per dialog
// round, success predicates, task sampling, auto-instructions, instruction
// quality labeling, dataset statistics and semantic validation.

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "avdn/attention.hpp"
#include "avdn/episode.hpp"
#include "avdn/rng.hpp"

namespace avdn {

inline constexpr double kSuccessIou = 0.4;
inline constexpr double kMaxStartDistance = 1500.0;
inline constexpr int kSampleAttempts = 10000;

inline constexpr const char* kSuccessText = "Yes, you have found it!!!";
inline constexpr const char* kAltitudeHintText = "Adjust your altitude and try again.";
inline constexpr const char* kAskHintText =
    "The destination is not in your view yet. Please ask the commander a question.";

// ---------------------------------------------------------------- goals

/// Either an intermediate goal view area or the destination rectangle.
class GoalArea {
 public:
  explicit GoalArea(ViewArea v) : goal_(v) {}
  explicit GoalArea(AxisRect r) : goal_(r) {}

  bool is_view() const { return std::holds_alternative<ViewArea>(goal_); }
  bool is_destination() const { return std::holds_alternative<AxisRect>(goal_); }
  const ViewArea& view() const { return std::get<ViewArea>(goal_); }
  const AxisRect& destination() const { return std::get<AxisRect>(goal_); }

  WorldPoint center() const { return is_view() ? view().center : destination().center(); }

  /// Rectangle used as the IoU reference. A view-area goal is represented by
  /// the axis-aligned bounding box of its footprint.
  AxisRect reference_rect() const { return is_view() ? bounding_rect(view()) : destination(); }

  friend bool operator==(const GoalArea& a, const GoalArea& b) {
    if (a.is_view() != b.is_view()) return false;
    if (a.is_view()) {
      return a.view().center == b.view().center && a.view().width == b.view().width &&
             a.view().rotation == b.view().rotation;
    }
    return a.destination() == b.destination();
  }

 private:
  std::variant<ViewArea, AxisRect> goal_;
};

/// Goal for dialog round `round_index`: the first view of the next
/// sub-trajectory, or the destination for the final round.
inline GoalArea goal_area(const Episode& ep, int round_index, const CameraModel& cam) {
  const int m = static_cast<int>(ep.round_count());
  if (round_index < 0 || round_index >= m) {
    throw Error(ErrorCode::IndexOutOfRange, "round " + std::to_string(round_index) + " of " + std::to_string(m));
  }
  if (round_index + 1 != m) {
    const auto& next = ep.sub_trajectories.at(static_cast<std::size_t>(round_index) + 1);
    return GoalArea(next.states.front().view(cam));
  }
  return GoalArea(ep.destination);
}

// ---------------------------------------------------------------- success

enum class SuccessMode {
  Claim,  // center inside the destination and IoU above threshold
  Eval,   // IoU above threshold only
};

inline bool check_success(const ViewArea& view, const AxisRect& dest, SuccessMode mode) {
  const bool overlap = iou(view, dest) > kSuccessIou;
  if (mode == SuccessMode::Eval) return overlap;
  return overlap && contains(dest, view.center);
}

// ---------------------------------------------------------------- tasks

enum class TaskKind { ANDH, ANDH_Full };

struct TaskInstance {
  TaskKind kind = TaskKind::ANDH_Full;
  std::string episode_id;
  std::string env_id;
  int round_index = 0;  // last round in the dialog context
  std::vector<DialogRound> dialog_context;
  DroneState start;
  GoalArea goal{AxisRect{}};
};

/// ANDH yields one task per dialog round, with the history up to that
/// round; ANDH-Full yields one task per episode with the whole dialog.
inline std::vector<TaskInstance> make_tasks(const std::vector<Episode>& episodes, TaskKind kind,
                                            const CameraModel& cam) {
  std::vector<TaskInstance> tasks;
  for (const auto& ep : episodes) {
    if (kind == TaskKind::ANDH_Full) {
      tasks.push_back({kind, ep.episode_id, ep.env_id, static_cast<int>(ep.round_count()) - 1, ep.rounds, ep.start,
                       GoalArea(ep.destination)});
      continue;
    }
    for (int i = 0; i < static_cast<int>(ep.round_count()); ++i) {
      std::vector<DialogRound> ctx(ep.rounds.begin(), ep.rounds.begin() + i + 1);
      tasks.push_back({kind, ep.episode_id, ep.env_id, i, std::move(ctx),
                       ep.sub_trajectories[static_cast<std::size_t>(i)].states.front(), goal_area(ep, i, cam)});
    }
  }
  return tasks;
}

// ---------------------------------------------------------------- sampling

struct SampledTask {
  DroneState start;
  AxisRect destination;
};

/// Picks a destination object uniformly, then rejection-samples a start
/// state within 1.5 km of it that is in bounds and not already successful
/// (under the weaker eval predicate, so claim success is excluded too).
inline SampledTask sample_task(const EnvironmentBundle& bundle, const CameraModel& cam, std::uint64_t seed) {
  if (bundle.objects.empty()) throw Error(ErrorCode::InvalidArgument, "environment has no destination objects");
  Rng rng(seed);
  const auto& dest = bundle.objects[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(bundle.objects.size()) - 1))];
  const WorldPoint c = dest.center();
  for (int attempt = 0; attempt < kSampleAttempts; ++attempt) {
    const double r = kMaxStartDistance * std::sqrt(rng.uniform());
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const DroneState s{{c.x + r * std::cos(theta), c.y + r * std::sin(theta)},
                       Heading(rng.uniform(0.0, 360.0)),
                       rng.uniform(cam.min_altitude, cam.max_altitude)};
    const ViewArea v = s.view(cam);
    if (!in_bounds(bundle.env, v)) continue;
    if (check_success(v, dest, SuccessMode::Eval)) continue;
    return {s, dest};
  }
  throw Error(ErrorCode::NoFeasibleStart, "no feasible start after " + std::to_string(kSampleAttempts) + " attempts");
}

// ---------------------------------------------------------------- auto-instructions

enum class AutoKind { Success, AltitudeHint, None };
enum class AltitudeDirection { Ascend, Descend };

struct AutoInstruction {
  AutoKind kind = AutoKind::None;
  std::string text;
  std::optional<AltitudeDirection> direction;
};

/// Simulator response to a follower claim.
inline AutoInstruction auto_instruction(const ViewArea& view, const AxisRect& dest) {
  if (check_success(view, dest, SuccessMode::Claim)) return {AutoKind::Success, kSuccessText, std::nullopt};
  if (contains(dest, view.center)) {
    const double mean_side = (dest.width() + dest.height()) / 2.0;
    const auto dir = view.width < mean_side ? AltitudeDirection::Ascend : AltitudeDirection::Descend;
    std::string text = kAltitudeHintText;
    text += dir == AltitudeDirection::Ascend ? " Try flying higher." : " Try flying lower.";
    return {AutoKind::AltitudeHint, std::move(text), dir};
  }
  return {AutoKind::None, "", std::nullopt};
}

// ---------------------------------------------------------------- quality labels

/// True when the net displacement of `sub` points more than 90 degrees away
/// from the destination as seen from the sub-trajectory's first state.
/// Net displacements under 1 m are never labeled.
inline bool label_direction_violation(const SubTrajectory& sub, const AxisRect& dest) {
  if (sub.states.size() < 2) throw Error(ErrorCode::InvalidArgument, "sub-trajectory needs at least 2 states");
  const WorldPoint from = sub.states.front().position;
  const WorldPoint moved = sub.states.back().position - from;
  const WorldPoint wanted = dest.center() - from;
  const double lm = norm(moved), lw = norm(wanted);
  if (lm < 1.0 || lw == 0.0) return false;
  return dot(moved, wanted) / (lm * lw) < -1e-12;
}

// ---------------------------------------------------------------- statistics

inline double path_length(const std::vector<DroneState>& states) {
  double len = 0.0;
  for (std::size_t i = 1; i < states.size(); ++i) len += distance(states[i - 1].position, states[i].position);
  return len;
}

inline double episode_path_length(const Episode& ep) {
  double len = 0.0;
  for (const auto& s : ep.sub_trajectories) len += path_length(s.states);
  return len;
}

struct SplitStats {
  std::size_t dialogs = 0;
  double mean_words_per_dialog = 0.0;
  double mean_rounds = 0.0;
  std::size_t sub_paths = 0;
  double mean_sub_path_length = 0.0;
  double mean_destination_dim = 0.0;
  double mean_path_length = 0.0;
};

struct StatsReport {
  SplitStats overall;
  std::map<std::string, SplitStats> per_split;
};

inline std::size_t word_count(const std::string& s) {
  std::istringstream in(s);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

inline StatsReport dataset_stats(const std::vector<Episode>& episodes) {
  if (episodes.empty()) throw Error(ErrorCode::InvalidArgument, "no episodes");
  struct Acc {
    std::size_t dialogs = 0, rounds = 0, subs = 0, words = 0;
    double sub_len = 0.0, dest_dim = 0.0, path_len = 0.0;
    void add(const Episode& ep) {
      ++dialogs;
      rounds += ep.round_count();
      for (const auto& r : ep.rounds) {
        words += word_count(r.commander);
        if (r.follower) words += word_count(*r.follower);
      }
      for (const auto& s : ep.sub_trajectories) {
        ++subs;
        sub_len += path_length(s.states);
      }
      dest_dim += (ep.destination.width() + ep.destination.height()) / 2.0;
      path_len += episode_path_length(ep);
    }
    SplitStats finish() const {
      SplitStats s;
      s.dialogs = dialogs;
      s.sub_paths = subs;
      if (dialogs) {
        s.mean_words_per_dialog = static_cast<double>(words) / dialogs;
        s.mean_rounds = static_cast<double>(rounds) / dialogs;
        s.mean_destination_dim = dest_dim / dialogs;
        s.mean_path_length = path_len / dialogs;
      }
      if (subs) s.mean_sub_path_length = sub_len / subs;
      return s;
    }
  };
  Acc all;
  std::map<std::string, Acc> per;
  for (const auto& ep : episodes) {
    all.add(ep);
    per[std::string(to_string(ep.split))].add(ep);
  }
  StatsReport r{all.finish(), {}};
  for (const auto& [k, a] : per) r.per_split[k] = a.finish();
  return r;
}

inline nlohmann::json to_json(const SplitStats& s) {
  return {{"dialogs", s.dialogs},
          {"mean_words_per_dialog", s.mean_words_per_dialog},
          {"mean_rounds", s.mean_rounds},
          {"sub_paths", s.sub_paths},
          {"mean_sub_path_length_m", s.mean_sub_path_length},
          {"mean_destination_dim_m", s.mean_destination_dim},
          {"mean_path_length_m", s.mean_path_length}};
}

inline nlohmann::json to_json(const StatsReport& r) {
  nlohmann::json j = {{"overall", to_json(r.overall)}, {"splits", nlohmann::json::object()}};
  for (const auto& [k, s] : r.per_split) j["splits"][k] = to_json(s);
  return j;
}

// ---------------------------------------------------------------- semantic validation

struct ValidationIssue {
  std::string pointer;
  std::string message;
};

/// Checks that need the environment: altitudes within the camera range,
/// every view in bounds, continuity between sub-trajectories, each step
/// landing inside the previous view, and recorded success.
inline std::vector<ValidationIssue> validate_episode(const Episode& ep, const RasterEnvironment& env,
                                                     const CameraModel& cam) {
  std::vector<ValidationIssue> issues;
  constexpr double tol = 1e-6;
  auto check_state = [&](const DroneState& s, const std::string& ptr) {
    if (!cam.altitude_in_range(s.altitude)) {
      issues.push_back({ptr + "/altitude", "altitude outside camera range"});
      return false;
    }
    if (!in_bounds(env, s.view(cam))) {
      issues.push_back({ptr, "view area leaves the environment extent"});
      return false;
    }
    return true;
  };

  const AxisRect ext = env.extent();
  if (!contains(ext, ep.destination.min) || !contains(ext, ep.destination.max)) {
    issues.push_back({"/destination", "destination outside the environment extent"});
  }
  check_state(ep.start, "/start");
  const DroneState* prev = nullptr;
  for (std::size_t i = 0; i < ep.sub_trajectories.size(); ++i) {
    const auto& sub = ep.sub_trajectories[i];
    for (std::size_t k = 0; k < sub.states.size(); ++k) {
      const auto& s = sub.states[k];
      const std::string ptr = "/sub_trajectories/" + std::to_string(i) + "/states/" + std::to_string(k);
      const bool ok = check_state(s, ptr);
      if (k == 0) {
        const DroneState& anchor = i == 0 ? ep.start : ep.sub_trajectories[i - 1].states.back();
        if (distance(anchor.position, s.position) > tol || std::abs(anchor.altitude - s.altitude) > tol) {
          issues.push_back({ptr, i == 0 ? "first state differs from the episode start"
                                        : "first state differs from the previous sub-trajectory's last state"});
        }
      } else if (ok && prev && cam.altitude_in_range(prev->altitude)) {
        const ViewArea pv = prev->view(cam);
        const auto [c, r] = world_to_view_pixel(pv, 1, s.position);
        if (c < -tol || c > 1 + tol || r < -tol || r > 1 + tol) {
          issues.push_back({ptr, "state is not reachable from the previous view area"});
        }
      }
      prev = &s;
    }
  }
  if (ep.success.value_or(false) && issues.empty()) {
    const auto& last = ep.sub_trajectories.back().states.back();
    if (!check_success(last.view(cam), ep.destination, SuccessMode::Claim)) {
      issues.push_back({"/success", "recorded as successful but the final view does not satisfy the claim check"});
    }
  }
  return issues;
}

}  // namespace avdn
