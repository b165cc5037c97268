// avdn: environment generation, dataset tooling, evaluation, the session
// service and a stdio session transport.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "avdn/episode_synth.hpp"
#include "avdn/evaluation.hpp"
#include "avdn/overview.hpp"
#include "avdn/service.hpp"
#include "avdn/synthetic.hpp"

using namespace avdn;

namespace {

TaskKind parse_task(const std::string& s) { return s == "andh" ? TaskKind::ANDH : TaskKind::ANDH_Full; }

const Episode& find_episode(const std::vector<Episode>& eps, const std::string& id) {
  for (const auto& ep : eps) {
    if (ep.episode_id == id) return ep;
  }
  throw Error(ErrorCode::UnknownEpisode, "unknown episode " + id);
}

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  f << j.dump(2) << '\n';
}

int cmd_gen_env(const SyntheticWorldSpec& spec, const std::string& out) {
  const EnvironmentBundle b = generate_synthetic_world(spec);
  save_environment(b, out);
  std::cout << b.env.env_id() << '\n';
  return 0;
}

int cmd_validate(const std::string& dataset, const std::string& env_dir) {
  std::vector<Episode> eps;
  try {
    eps = load_dataset(dataset);
  } catch (const SchemaViolation& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  const EnvironmentStore envs(env_dir);
  const CameraModel cam;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    for (const auto& issue : validate_episode(eps[i], envs.get(eps[i].env_id)->env, cam)) {
      std::cerr << dataset << ":" << i + 1 << ": " << issue.pointer << ": " << issue.message << '\n';
      ++bad;
    }
  }
  std::cout << eps.size() << " episodes, " << bad << " issues\n";
  return bad == 0 ? 0 : 1;
}

int cmd_sample(const std::string& env_dir, const std::string& env_id, int count, std::uint64_t seed, int rounds,
               const std::string& split, const std::string& out) {
  const EnvironmentStore envs(env_dir);
  SynthesisConfig cfg;
  cfg.rounds = rounds;
  const auto sp = split_from_string(split);
  if (!sp) throw Error(ErrorCode::InvalidArgument, "unknown split " + split);
  cfg.split = *sp;
  save_dataset(synthesize_corpus(*envs.get(env_id), {}, cfg, seed, count), out);
  return 0;
}

struct EvalArgs {
  std::string dataset, env_dir = "envs", task = "andh-full", agent = "oracle", agent_cmd, gp_mode = "literal", report;
  std::string env_id;
  int sampled = 0;
  std::uint64_t seed = 0;
  int max_steps = 0;
};

int cmd_eval(const EvalArgs& a) {
  const EnvironmentStore envs(a.env_dir);
  const CameraModel cam;
  const TaskKind kind = parse_task(a.task);
  std::vector<Episode> eps;
  std::vector<SessionTask> tasks;
  if (a.sampled > 0) {
    if (a.agent == "oracle") throw Error(ErrorCode::InvalidArgument, "the oracle needs recorded episodes");
    tasks = sampled_tasks(*envs.get(a.env_id), cam, a.seed, a.sampled, kind);
  } else {
    eps = load_dataset(a.dataset);
    tasks = session_tasks(eps, kind, cam);
  }
  EvalConfig cfg;
  cfg.gp_mode = a.gp_mode == "delta" ? GpMode::DeltaDistance : GpMode::PaperLiteral;
  if (a.max_steps > 0) cfg.max_steps = a.max_steps;
  const AgentFactory factory = [&](const SessionTask& st, std::size_t i) -> std::unique_ptr<Agent> {
    if (a.agent == "oracle") return std::make_unique<OracleAgent>(find_episode(eps, st.task.episode_id), cam);
    if (a.agent == "random") return std::make_unique<RandomAgent>(a.seed + i, cam);
    if (a.agent == "stationary") return std::make_unique<StationaryAgent>();
    return std::make_unique<RemoteAgent>(a.agent_cmd);
  };
  const EvalOutcome out = evaluate_agent(envs, tasks, factory, cfg);
  nlohmann::json j = to_json(out.report);
  j["agent"] = a.agent;
  j["task"] = a.task;
  write_json(j, a.report);
  if (!a.report.empty() && a.report != "-") {
    std::cout << "n=" << out.report.n << " sr=" << out.report.sr << " spl=" << out.report.spl << " gp=" << out.report.gp
              << '\n';
  }
  return 0;
}

int cmd_serve(const std::string& config) {
  ServiceConfig cfg;
  if (config.empty()) {
    apply_env_overrides(cfg);
  } else {
    cfg = load_service_config(config);
  }
  // Block the stop signals before any thread starts, then wait for one here.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
  Service svc(cfg);
  svc.start();
  std::cerr << "http://" << cfg.host << ":" << svc.http_port() << "  socket " << svc.socket_port() << '\n';
  int sig = 0;
  sigwait(&stop_signals, &sig);
  svc.stop();
  return 0;
}

int cmd_overview(const std::string& dataset, const std::string& env_dir, const std::string& episode, int round,
                 const std::string& out) {
  const auto eps = load_dataset(dataset);
  const Episode& ep = find_episode(eps, episode);
  const EnvironmentStore envs(env_dir);
  write_png(out, render_overview(envs.get(ep.env_id)->env, CameraModel{}, ep, round).image);
  return 0;
}

// Framed JSON over stdin/stdout. Besides agent messages, live sessions
// accept {"type":"Commander","text":...} frames.
int cmd_session(const std::string& env_dir, const std::string& dataset, const std::string& episode,
                const std::string& task, int round, const std::string& env_id, std::uint64_t seed,
                const std::string& config) {
  const EnvironmentStore envs(env_dir);
  SessionConfig cfg = config.empty() ? SessionConfig{} : session_config_from_json(nlohmann::json::parse(config));
  SessionTask st;
  std::shared_ptr<const EnvironmentBundle> env;
  if (!episode.empty()) {
    const auto eps = load_dataset(dataset);
    const Episode& ep = find_episode(eps, episode);
    env = envs.get(ep.env_id);
    st = session_task(ep, parse_task(task), round, cfg.camera);
  } else {
    env = envs.get(env_id);
    st = sampled_session_task(*env, cfg.camera, seed);
    cfg.mode = SessionConfig::Mode::Live;
  }
  Session s(env, st, cfg);
  const auto enc = proto::inline_images();
  auto emit = [&](const std::vector<proto::SimMessage>& msgs) {
    for (const auto& m : msgs) proto::write_frame(std::cout, proto::to_json(m, enc));
  };
  emit(s.begin());
  while (s.phase() != Phase::Done) {
    const auto j = proto::read_frame(std::cin);
    if (!j) break;
    if (j->value("type", "") == "Commander") {
      try {
        emit(s.commander(j->value("text", "")));
      } catch (const Error& e) {
        emit({proto::ErrorMsg{std::string(to_string(e.code())), e.what()}});
      }
      continue;
    }
    try {
      emit(s.handle(proto::agent_message_from_json(*j)));
    } catch (const Error& e) {
      emit({proto::ErrorMsg{std::string(to_string(e.code())), e.what()}});
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aerial vision-and-dialog navigation simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SyntheticWorldSpec spec;
  std::string gen_out = "envs";
  auto* gen = app.add_subcommand("gen-env", "Generate a synthetic environment raster and sidecar");
  gen->add_option("--seed", spec.seed);
  gen->add_option("--size", spec.size_px, "Raster side in pixels");
  gen->add_option("--mpp", spec.meters_per_pixel, "Meters per pixel");
  gen->add_option("--objects", spec.object_count, "Destination objects");
  gen->add_option("--out", gen_out, "Environment directory");

  std::string dataset, env_dir = "envs";
  auto* val = app.add_subcommand("validate-dataset", "Check a JSONL dataset against the schema and its environments");
  val->add_option("--dataset", dataset)->required();
  val->add_option("--env-dir", env_dir);

  auto* stats = app.add_subcommand("stats", "Per-split dataset statistics");
  stats->add_option("--dataset", dataset)->required();

  std::string env_id, split = "train", out;
  int count = 100, rounds = 0;
  std::uint64_t seed = 0;
  auto* sample = app.add_subcommand("sample-episodes", "Synthesize recorded episodes over an environment");
  sample->add_option("--env-dir", env_dir);
  sample->add_option("--env-id", env_id)->required();
  sample->add_option("--count", count);
  sample->add_option("--seed", seed);
  sample->add_option("--rounds", rounds, "Rounds per episode (0 draws 1..3)");
  sample->add_option("--split", split);
  sample->add_option("--out", out)->required();

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Run an agent over tasks and report SR / SPL / GP");
  ev->add_option("--dataset", ea.dataset);
  ev->add_option("--env-dir", ea.env_dir);
  ev->add_option("--task", ea.task)->check(CLI::IsMember({"andh", "andh-full"}));
  ev->add_option("--agent", ea.agent)->check(CLI::IsMember({"oracle", "random", "stationary", "remote"}));
  ev->add_option("--agent-cmd", ea.agent_cmd, "Shell command for --agent remote");
  ev->add_option("--gp-mode", ea.gp_mode)->check(CLI::IsMember({"literal", "delta"}));
  ev->add_option("--report", ea.report, "Report path (stdout if omitted)");
  ev->add_option("--seed", ea.seed);
  ev->add_option("--max-steps", ea.max_steps, "Step horizon (default 200 per round)");
  ev->add_option("--sampled", ea.sampled, "Evaluate on N sampled tasks instead of a dataset");
  ev->add_option("--env-id", ea.env_id, "Environment for --sampled");

  std::string config;
  auto* serve = app.add_subcommand("serve", "Run the HTTP and socket session service");
  serve->add_option("--config", config, "Service config JSON");

  std::string episode;
  int round = 0;
  auto* ov = app.add_subcommand("render-overview", "Render the commander overview of a recorded episode");
  ov->add_option("--dataset", dataset)->required();
  ov->add_option("--env-dir", env_dir);
  ov->add_option("--episode", episode)->required();
  ov->add_option("--round", round);
  ov->add_option("--out", out)->required();

  std::string task = "andh-full";
  auto* sess = app.add_subcommand("session", "One session over framed stdin/stdout");
  sess->add_option("--env-dir", env_dir);
  sess->add_option("--dataset", dataset);
  sess->add_option("--episode", episode);
  sess->add_option("--task", task)->check(CLI::IsMember({"andh", "andh-full"}));
  sess->add_option("--round", round);
  sess->add_option("--env-id", env_id);
  sess->add_option("--seed", seed);
  sess->add_option("--config", config, "Session config as inline JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_env(spec, gen_out);
    if (*val) return cmd_validate(dataset, env_dir);
    if (*stats) {
      write_json(to_json(dataset_stats(load_dataset(dataset))), "");
      return 0;
    }
    if (*sample) return cmd_sample(env_dir, env_id, count, seed, rounds, split, out);
    if (*ev) {
      if (ea.sampled <= 0 && ea.dataset.empty()) throw Error(ErrorCode::InvalidArgument, "eval needs --dataset or --sampled");
      if (ea.agent == "remote" && ea.agent_cmd.empty()) throw Error(ErrorCode::InvalidArgument, "--agent remote needs --agent-cmd");
      return cmd_eval(ea);
    }
    if (*serve) return cmd_serve(config);
    if (*ov) return cmd_overview(dataset, env_dir, episode, round, out);
    if (*sess) return cmd_session(env_dir, dataset, episode, task, round, env_id, seed, config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
