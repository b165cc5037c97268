#pragma once

// Navigation metrics (SR, SPL, GP), the progress target and stopping rule,
// and the navigation loss used as a diagnostic for external learners.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avdn/attention.hpp"
#include "avdn/task.hpp"

namespace avdn {

enum class GpMode { PaperLiteral, DeltaDistance };

inline std::string_view to_string(GpMode m) { return m == GpMode::PaperLiteral ? "paper_literal" : "delta_distance"; }

struct EpisodeResult {
  std::string task_id;
  std::vector<DroneState> predicted_states;  // [0] is the task start
  bool success = false;
  double path_length = 0.0;
  double goal_distance_start = 0.0;
  double goal_distance_final = 0.0;
};

/// Scores a predicted trajectory against a task: the centers form the path
/// and the last view decides success (IoU only).
inline EpisodeResult make_result(const TaskInstance& task, std::vector<DroneState> states, const CameraModel& cam) {
  if (states.empty()) states.push_back(task.start);
  EpisodeResult r;
  r.task_id = task.episode_id + (task.kind == TaskKind::ANDH ? "#" + std::to_string(task.round_index) : "");
  r.path_length = path_length(states);
  const WorldPoint gc = task.goal.center();
  r.goal_distance_start = distance(task.start.position, gc);
  r.goal_distance_final = distance(states.back().position, gc);
  r.success = check_success(states.back().view(cam), task.goal.reference_rect(), SuccessMode::Eval);
  r.predicted_states = std::move(states);
  return r;
}

inline double success_rate(std::span<const EpisodeResult> results) {
  if (results.empty()) throw Error(ErrorCode::EmptyResults, "success rate of no results");
  std::size_t ok = 0;
  for (const auto& r : results) ok += r.success ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(results.size());
}

/// Per-episode SPL term S * L / max(P, L) with L the straight-line distance
/// from the start to the goal center.
inline double spl_term(const EpisodeResult& r) {
  const double l = r.goal_distance_start;
  if (!(l > 0.0)) throw Error(ErrorCode::DegenerateReference, "start coincides with the goal center");
  if (!r.success) return 0.0;
  return l / std::max(r.path_length, l);
}

inline double spl(std::span<const EpisodeResult> results) {
  if (results.empty()) throw Error(ErrorCode::EmptyResults, "SPL of no results");
  double sum = 0.0;
  for (const auto& r : results) sum += spl_term(r);
  return sum / static_cast<double>(results.size());
}

inline double goal_progress(const EpisodeResult& r, GpMode mode = GpMode::PaperLiteral) {
  if (mode == GpMode::PaperLiteral) return r.path_length - r.goal_distance_final;
  return r.goal_distance_start - r.goal_distance_final;
}

inline double progress_target(const ViewArea& view, const AxisRect& dest) { return iou(view, dest); }

struct StopConfig {
  enum class When { AtOrAbove, Below };
  double threshold = 0.5;
  When when = When::AtOrAbove;
};

inline bool should_stop(double g_hat, const StopConfig& cfg = {}) {
  if (!(g_hat >= 0.0 && g_hat <= 1.0)) throw Error(ErrorCode::InvalidArgument, "progress must lie in [0,1]");
  return cfg.when == StopConfig::When::AtOrAbove ? g_hat >= cfg.threshold : g_hat < cfg.threshold;
}

struct NavLoss {
  double total = 0.0;
  double rotation = 0.0;  // squared heading-change difference, degrees / 180
  double waypoint = 0.0;  // mean squared error over (x, y, h / max_altitude)
  double progress = 0.0;
};

/// Navigation loss for one prediction. Rotations are the heading changes
/// each waypoint induces from `ctx`.
inline NavLoss nav_loss(const Waypoint& w_hat, const Waypoint& w, double g_hat, double g, const DroneState& ctx,
                        const CameraModel& cam) {
  const double rot_hat = rot_delta(ctx, propose_waypoint(cam, ctx, w_hat));
  const double rot = rot_delta(ctx, propose_waypoint(cam, ctx, w));
  NavLoss l;
  const double dr = (rot_hat - rot) / 180.0;
  l.rotation = dr * dr;
  const double dx = w_hat.x - w.x, dy = w_hat.y - w.y, dh = (w_hat.h - w.h) / cam.max_altitude;
  l.waypoint = (dx * dx + dy * dy + dh * dh) / 3.0;
  l.progress = (g_hat - g) * (g_hat - g);
  l.total = l.rotation + l.waypoint + l.progress;
  return l;
}

struct AttentionPrediction {
  SaliencyMap predicted;
  AttentionMask truth;
};

struct MetricsReport {
  std::size_t n = 0;
  double sr = 0.0;
  double spl = 0.0;
  double gp = 0.0;
  GpMode gp_mode = GpMode::PaperLiteral;
  std::optional<double> nss_mean;
  std::vector<EpisodeResult> per_episode;
};

/// Aggregates one predicted trajectory per task. NSS is averaged over the
/// frames whose ground truth has attended pixels.
inline MetricsReport evaluate_run(std::span<const TaskInstance> tasks,
                                  std::span<const std::vector<DroneState>> trajectories, const CameraModel& cam,
                                  GpMode gp_mode = GpMode::PaperLiteral,
                                  std::span<const AttentionPrediction> attention = {}) {
  if (tasks.size() != trajectories.size()) {
    throw Error(ErrorCode::ArityMismatch, std::to_string(tasks.size()) + " tasks but " +
                                              std::to_string(trajectories.size()) + " trajectories");
  }
  MetricsReport rep;
  rep.gp_mode = gp_mode;
  rep.n = tasks.size();
  for (std::size_t i = 0; i < tasks.size(); ++i) rep.per_episode.push_back(make_result(tasks[i], trajectories[i], cam));
  if (!rep.per_episode.empty()) {
    rep.sr = success_rate(rep.per_episode);
    rep.spl = spl(rep.per_episode);
    double gp = 0.0;
    for (const auto& r : rep.per_episode) gp += goal_progress(r, gp_mode);
    rep.gp = gp / static_cast<double>(rep.per_episode.size());
  }
  double nss_sum = 0.0;
  std::size_t nss_n = 0;
  for (const auto& a : attention) {
    if (a.truth.attended() == 0) continue;
    nss_sum += nss(a.predicted, a.truth);
    ++nss_n;
  }
  if (nss_n) rep.nss_mean = nss_sum / static_cast<double>(nss_n);
  return rep;
}

inline nlohmann::json to_json(const MetricsReport& r, bool include_states = false) {
  nlohmann::json j = {{"n", r.n}, {"sr", r.sr}, {"spl", r.spl}, {"gp", r.gp}, {"gp_mode", to_string(r.gp_mode)}};
  if (r.nss_mean) j["nss_mean"] = *r.nss_mean;
  j["per_episode"] = nlohmann::json::array();
  for (const auto& e : r.per_episode) {
    nlohmann::json je = {{"task_id", e.task_id},
                         {"success", e.success},
                         {"path_length", e.path_length},
                         {"goal_distance_start", e.goal_distance_start},
                         {"goal_distance_final", e.goal_distance_final},
                         {"spl", spl_term(e)},
                         {"gp", goal_progress(e, r.gp_mode)},
                         {"steps", e.predicted_states.size() - 1}};
    if (include_states) {
      je["states"] = nlohmann::json::array();
      for (const auto& s : e.predicted_states) je["states"].push_back(to_json(s));
    }
    j["per_episode"].push_back(std::move(je));
  }
  return j;
}

}  // namespace avdn
