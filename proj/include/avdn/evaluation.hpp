#pragma once

// Batch evaluation: run an agent through a list of tasks in evaluation
// mode (a claim stops the episode) and aggregate the metrics.

#include <functional>
#include <memory>

#include "avdn/agents.hpp"
#include "avdn/metrics.hpp"

namespace avdn {

inline constexpr int kStepsPerRound = 200;

struct EvalConfig {
  GpMode gp_mode = GpMode::PaperLiteral;
  std::optional<int> max_steps;  // default: kStepsPerRound per round the task spans
  SessionConfig session;
};

/// Step horizon for a task: one budget per round the agent must fly.
inline int step_budget(const SessionTask& st, const EvalConfig& cfg) {
  if (cfg.max_steps) return *cfg.max_steps;
  const int rounds = st.task.kind == TaskKind::ANDH_Full
                         ? std::max<int>(1, static_cast<int>(st.task.dialog_context.size()))
                         : 1;
  return kStepsPerRound * rounds;
}

using AgentFactory = std::function<std::unique_ptr<Agent>(const SessionTask&, std::size_t index)>;

struct EvalOutcome {
  MetricsReport report;
  std::vector<std::vector<DroneState>> trajectories;
};

inline EvalOutcome evaluate_agent(const EnvironmentStore& envs, std::span<const SessionTask> tasks,
                                  const AgentFactory& make_agent, const EvalConfig& cfg = {}) {
  EvalOutcome out;
  std::vector<TaskInstance> instances;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const SessionTask& st = tasks[i];
    SessionConfig sc = cfg.session;
    sc.mode = SessionConfig::Mode::Offline;
    sc.claim_ends_episode = true;
    sc.max_steps = step_budget(st, cfg);
    Session session(envs.get(st.task.env_id), st, sc);
    const auto agent = make_agent(st, i);
    drive(session, *agent);
    instances.push_back(st.task);
    out.trajectories.push_back(session.history());
  }
  out.report = evaluate_run(instances, out.trajectories, cfg.session.camera, cfg.gp_mode);
  return out;
}

/// Tasks with a sampled start and destination and a single generic
/// instruction, for baselines that ignore language.
inline std::vector<SessionTask> sampled_tasks(const EnvironmentBundle& bundle, const CameraModel& cam, std::uint64_t seed,
                                              int count, TaskKind kind = TaskKind::ANDH) {
  std::vector<SessionTask> out;
  for (int i = 0; i < count; ++i) {
    SessionTask st = sampled_session_task(bundle, cam, seed + static_cast<std::uint64_t>(i));
    st.task.kind = kind;
    st.task.dialog_context = {{0, "Find the destination.", std::nullopt, {}}};
    st.recorded_rounds = st.task.dialog_context;
    out.push_back(std::move(st));
  }
  return out;
}

}  // namespace avdn
