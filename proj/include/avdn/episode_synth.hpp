#pragma once

// Synthetic recorded episodes: a scripted follower flies waypoints from a
// sampled start to the destination, the path is cut into dialog rounds, and
// templated commander/follower utterances and attention clicks are attached.
// Every recorded state is produced by the dynamics, so the episodes replay
// exactly.

#include <string>
#include <vector>

#include "avdn/task.hpp"

namespace avdn {

struct SynthesisConfig {
  int rounds = 0;  // 0 draws M uniformly from {1, 2, 3}
  double cruise_min_altitude = 60.0;
  double cruise_max_altitude = 150.0;
  double step_fraction = 0.4;  // of the current view width; < 0.5 keeps targets in view
  double lateral_jitter = 0.1;  // of the step length
  double attention_fraction = 1.0 / 7.0;
  Split split = Split::Train;
};

inline std::string compass_word(const Heading& h) {
  static constexpr const char* kNames[] = {"north", "north-east", "east", "south-east",
                                           "south", "south-west", "west", "north-west"};
  return kNames[static_cast<int>(std::floor((h.degrees() + 22.5) / 45.0)) % 8];
}

namespace detail {

// Flies toward `target` in steps no longer than step_fraction * width,
// appending each resulting state. Lowers the altitude when a step would
// leave the environment. Returns false if the route is infeasible.
inline bool fly_to(const RasterEnvironment& env, const CameraModel& cam, const SynthesisConfig& cfg, Rng& rng,
                   std::vector<DroneState>& path, WorldPoint target, double altitude, bool jitter) {
  for (int guard = 0; guard < 10000; ++guard) {
    const DroneState& cur = path.back();
    const double w = width_from_altitude(cam, cur.altitude);
    const double max_step = cfg.step_fraction * w;
    const WorldPoint d = target - cur.position;
    const double dist = norm(d);
    if (dist <= kGeomEps) return true;

    WorldPoint next = target;
    if (dist > max_step) {
      const int steps = static_cast<int>(std::ceil(dist / max_step));
      next = cur.position + (1.0 / steps) * d;
      if (jitter && steps > 1) {
        const WorldPoint perp{-d.y / dist, d.x / dist};
        next = next + (rng.uniform(-1.0, 1.0) * cfg.lateral_jitter * dist / steps) * perp;
      }
    }
    double h = altitude;
    for (;;) {
      const Transition t = apply_waypoint(env, cam, cur, waypoint_to(cam, cur, next, h));
      if (t.accepted()) {
        path.push_back(t.state);
        break;
      }
      if (h <= cam.min_altitude) return false;
      h = std::max(cam.min_altitude, h * 0.8);
    }
  }
  return false;
}

inline std::vector<AttentionClick> place_attention(const ViewArea& view, const std::vector<AttentionClick>& existing,
                                                   double target_fraction, Rng& rng) {
  std::vector<AttentionClick> all = existing;
  std::vector<AttentionClick> added;
  constexpr int kProbeResolution = 64;
  for (int i = 0; i < 24; ++i) {
    if (render_mask(all, view, kProbeResolution).attended_fraction() >= target_fraction) break;
    const double r = 0.4 * view.width;
    const AttentionClick c{view.to_world(rng.uniform(-r, r), rng.uniform(-r, r)), view.width};
    all.push_back(c);
    added.push_back(c);
  }
  return added;
}

}  // namespace detail

/// Generates one recorded-successful episode. Retries with derived seeds
/// when a sampled task admits no in-bounds route.
inline Episode synthesize_episode(const EnvironmentBundle& bundle, const CameraModel& cam, const SynthesisConfig& cfg,
                                  std::uint64_t seed, std::string episode_id) {
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    const std::uint64_t s = seed * 1000003ull + attempt;
    const SampledTask task = sample_task(bundle, cam, s);
    Rng rng(s ^ 0x9e3779b97f4a7c15ull);
    const int m = cfg.rounds > 0 ? cfg.rounds : static_cast<int>(rng.uniform_int(1, 3));

    const AxisRect& dest = task.destination;
    const WorldPoint goal = dest.center();
    const double final_altitude = std::clamp(std::sqrt(dest.area()) / cam.scale(), cam.min_altitude, cam.max_altitude);
    const double cruise = rng.uniform(cfg.cruise_min_altitude, cfg.cruise_max_altitude);

    std::vector<DroneState> path{task.start};
    // Approach the goal from the south so the final view is north-up.
    const WorldPoint staging{goal.x, goal.y - 0.3 * width_from_altitude(cam, std::min(cruise, cam.max_altitude))};
    if (!detail::fly_to(bundle.env, cam, cfg, rng, path, staging, cruise, true)) continue;
    if (!detail::fly_to(bundle.env, cam, cfg, rng, path, goal, final_altitude, false)) continue;
    // The final view must also be reached with the final altitude.
    if (path.back().altitude != final_altitude) {
      const Transition t = apply_waypoint(bundle.env, cam, path.back(), {0.5, 0.5, final_altitude});
      if (!t.accepted()) continue;
      path.push_back(t.state);
    }
    const int steps = static_cast<int>(path.size()) - 1;
    if (steps < m) continue;
    if (!check_success(path.back().view(cam), dest, SuccessMode::Claim)) continue;

    // Cut the path into m sub-trajectories sharing boundary states.
    std::vector<int> cuts{0};
    {
      std::vector<int> candidates;
      for (int i = 1; i < steps; ++i) candidates.push_back(i);
      for (int k = 0; k < m - 1; ++k) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(k, static_cast<std::int64_t>(candidates.size()) - 1));
        std::swap(candidates[static_cast<std::size_t>(k)], candidates[j]);
        cuts.push_back(candidates[static_cast<std::size_t>(k)]);
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.push_back(steps);
    }

    Episode ep;
    ep.episode_id = std::move(episode_id);
    ep.env_id = bundle.env.env_id();
    ep.split = cfg.split;
    ep.start = task.start;
    ep.destination = dest;
    ep.success = true;
    static constexpr const char* kQuestions[] = {
        "where should I go? I can see a road below me.",
        "could you further explain it? I do not see the building yet.",
        "Should I keep flying in this direction or turn?",
        "I see several roofs here, which one is the destination?",
    };
    for (int i = 0; i < m; ++i) {
      const DroneState& from = path[static_cast<std::size_t>(cuts[static_cast<std::size_t>(i)])];
      const double d = distance(from.position, goal);
      std::ostringstream text;
      if (i == 0) {
        text << "The destination is a building about " << static_cast<int>(std::lround(d / 10.0) * 10)
             << " meters to the " << compass_word(bearing(from.position, goal)) << ". Fly there and find it.";
      } else {
        text << "Keep heading " << compass_word(bearing(from.position, goal)) << " for about "
             << static_cast<int>(std::lround(d / 10.0) * 10) << " meters.";
      }
      DialogRound r{i, text.str(), std::nullopt, {}};
      if (i + 1 < m) {
        r.follower = kQuestions[rng.uniform_int(0, std::size(kQuestions) - 1)];
      } else {
        r.auto_instructions.push_back(kSuccessText);
      }
      ep.rounds.push_back(std::move(r));

      SubTrajectory sub{i, {}};
      for (int k = cuts[static_cast<std::size_t>(i)]; k <= cuts[static_cast<std::size_t>(i) + 1]; ++k) {
        sub.states.push_back(path[static_cast<std::size_t>(k)]);
      }
      const auto added =
          detail::place_attention(sub.states.back().view(cam), ep.attention_clicks, cfg.attention_fraction, rng);
      ep.attention_clicks.insert(ep.attention_clicks.end(), added.begin(), added.end());
      ep.sub_trajectories.push_back(std::move(sub));
    }
    return ep;
  }
  throw Error(ErrorCode::NoFeasibleStart, "could not synthesize an episode for seed " + std::to_string(seed));
}

inline std::vector<Episode> synthesize_corpus(const EnvironmentBundle& bundle, const CameraModel& cam,
                                              const SynthesisConfig& cfg, std::uint64_t seed, int count) {
  std::vector<Episode> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(synthesize_episode(bundle, cam, cfg, seed + static_cast<std::uint64_t>(i),
                                     bundle.env.env_id() + "-" + std::to_string(seed) + "-" + std::to_string(i)));
  }
  return out;
}

}  // namespace avdn
