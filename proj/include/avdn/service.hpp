#pragma once

// Session host: HTTP endpoints for session management, images and
// long-polled events, plus a framed TCP port carrying one bidirectional
// message stream per attached client.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "avdn/agents.hpp"
#include "avdn/overview.hpp"

namespace avdn {

inline constexpr const char* kVersion = "0.1.0";

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = 8080;         // 0 picks a free port
  int socket_port = 8081;  // 0 picks a free port
  std::filesystem::path env_dir = "envs";
  std::filesystem::path dataset;  // optional JSONL
  std::filesystem::path static_dir;
  std::filesystem::path transcript_dir;
  double idle_timeout_s = 1800.0;
  nlohmann::json session_defaults = nlohmann::json::object();
  std::optional<std::vector<std::string>> shortcut_questions;
};

inline ServiceConfig service_config_from_json(const nlohmann::json& j) {
  ServiceConfig c;
  try {
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.socket_port = j.value("socket_port", c.socket_port);
    c.env_dir = j.value("env_dir", c.env_dir.string());
    c.dataset = j.value("dataset", std::string());
    c.static_dir = j.value("static_dir", std::string());
    c.transcript_dir = j.value("transcript_dir", std::string());
    c.idle_timeout_s = j.value("idle_timeout_s", c.idle_timeout_s);
    c.session_defaults = j.value("session_defaults", nlohmann::json::object());
    if (j.contains("shortcut_questions")) c.shortcut_questions = j.at("shortcut_questions").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad service config: ") + e.what());
  }
  session_config_from_json(c.session_defaults);
  return c;
}

/// AVDN_PORT, AVDN_SOCKET_PORT, AVDN_ENV_DIR, AVDN_DATASET, AVDN_STATIC_DIR,
/// AVDN_TRANSCRIPT_DIR and AVDN_IDLE_TIMEOUT override file values.
inline void apply_env_overrides(ServiceConfig& c, const std::function<const char*(const char*)>& getenv = ::getenv) {
  auto num = [](const char* name, const char* v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != std::strlen(v)) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + " is not a number: " + v);
    }
  };
  if (const char* v = getenv("AVDN_PORT")) c.port = static_cast<int>(num("AVDN_PORT", v));
  if (const char* v = getenv("AVDN_SOCKET_PORT")) c.socket_port = static_cast<int>(num("AVDN_SOCKET_PORT", v));
  if (const char* v = getenv("AVDN_ENV_DIR")) c.env_dir = v;
  if (const char* v = getenv("AVDN_DATASET")) c.dataset = v;
  if (const char* v = getenv("AVDN_STATIC_DIR")) c.static_dir = v;
  if (const char* v = getenv("AVDN_TRANSCRIPT_DIR")) c.transcript_dir = v;
  if (const char* v = getenv("AVDN_IDLE_TIMEOUT")) c.idle_timeout_s = num("AVDN_IDLE_TIMEOUT", v);
}

inline ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  ServiceConfig c = service_config_from_json(j);
  apply_env_overrides(c);
  return c;
}

/// Corner-guide side as a fraction of the frame: a frame-sized, axis-aligned
/// destination overlapping the view in an r x r corner has IoU
/// r^2 / (2 - r^2), which equals `threshold` at this r.
inline double iou_guide_fraction(double threshold = kSuccessIou) { return std::sqrt(2.0 * threshold / (1.0 + threshold)); }

inline int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownEnvironment:
    case ErrorCode::UnknownEpisode:
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::ProtocolViolation: return 409;
    case ErrorCode::IoError:
    case ErrorCode::ReplayDivergence: return 500;
    default: return 400;
  }
}

class Service {
 public:
  explicit Service(ServiceConfig cfg)
      : cfg_(std::move(cfg)), envs_(cfg_.env_dir), defaults_(session_config_from_json(cfg_.session_defaults)) {
    if (!cfg_.dataset.empty()) {
      episodes_ = load_dataset(cfg_.dataset);
      for (std::size_t i = 0; i < episodes_.size(); ++i) episode_index_[episodes_[i].episode_id] = i;
    }
    routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;
  ~Service() { stop(); }

  /// Binds both ports and starts serving in background threads.
  void start() {
    std::signal(SIGPIPE, SIG_IGN);
    http_port_ = cfg_.port == 0 ? http_.bind_to_any_port(cfg_.host) : (http_.bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1);
    if (http_port_ < 0) throw Error(ErrorCode::IoError, "cannot bind HTTP port " + std::to_string(cfg_.port));
    open_socket_listener();
    running_ = true;
    threads_.emplace_back([this] { http_.listen_after_bind(); });
    threads_.emplace_back([this] { accept_loop(); });
    threads_.emplace_back([this] { reap_loop(); });
    http_.wait_until_ready();
  }

  void stop() {
    std::lock_guard stopping(stop_mu_);
    if (!running_.exchange(false)) return;
    http_.stop();
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    {
      std::lock_guard lk(conn_mu_);
      for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    {
      std::lock_guard lk(sessions_mu_);
      for (auto& [id, e] : sessions_) close_entry(*e);
    }
    reap_cv_.notify_all();
    for (auto& t : threads_) t.join();
    threads_.clear();
    std::vector<std::thread> conns;
    {
      std::lock_guard lk(conn_mu_);
      conns.swap(conn_threads_);
    }
    for (auto& t : conns) t.join();
  }

  void wait() {
    std::unique_lock lk(sessions_mu_);
    reap_cv_.wait(lk, [this] { return !running_; });
  }

  int http_port() const { return http_port_; }
  int socket_port() const { return socket_port_; }

  // ------------------------------------------------------------ direct API

  nlohmann::json create_session(const nlohmann::json& req) {
    SessionConfig cfg = defaults_;
    if (req.contains("config")) {
      nlohmann::json merged = to_json(defaults_);
      merged.update(req.at("config"));
      cfg = session_config_from_json(merged);
    }
    const std::string role = req.value("role", std::string("follower_ui"));
    if (role != "follower_ui" && role != "remote_agent") throw Error(ErrorCode::InvalidArgument, "role: " + role);
    const std::string image_mode = req.value("image_mode", std::string(role == "remote_agent" ? "inline" : "ref"));
    if (image_mode != "ref" && image_mode != "inline") throw Error(ErrorCode::InvalidArgument, "image_mode: " + image_mode);

    SessionTask task;
    std::shared_ptr<const EnvironmentBundle> env;
    if (req.contains("episode_id")) {
      const std::string id = req.at("episode_id").get<std::string>();
      const auto it = episode_index_.find(id);
      if (it == episode_index_.end()) throw Error(ErrorCode::UnknownEpisode, "unknown episode " + id);
      const Episode& ep = episodes_[it->second];
      env = envs_.get(ep.env_id);
      const std::string kind = req.value("task", std::string("andh-full"));
      if (kind != "andh" && kind != "andh-full") throw Error(ErrorCode::InvalidArgument, "task: " + kind);
      task = session_task(ep, kind == "andh" ? TaskKind::ANDH : TaskKind::ANDH_Full, req.value("round", 0), cfg.camera);
      if (!req.contains("config") || !req.at("config").contains("mode")) cfg.mode = SessionConfig::Mode::Offline;
    } else {
      if (!req.contains("env_id")) throw Error(ErrorCode::InvalidArgument, "need env_id or episode_id");
      env = envs_.get(req.at("env_id").get<std::string>());
      task = sampled_session_task(*env, cfg.camera, req.value("seed", std::uint64_t{0}));
      cfg.mode = SessionConfig::Mode::Live;
    }

    auto entry = std::make_shared<Entry>();
    entry->id = new_session_id();
    entry->role = role;
    entry->image_mode = image_mode;
    entry->created_at = now_iso8601();
    entry->session = std::make_unique<Session>(env, std::move(task), cfg);
    entry->touch();
    {
      std::lock_guard lk(entry->mu);
      publish(*entry, entry->session->begin());
    }
    {
      std::lock_guard lk(sessions_mu_);
      sessions_[entry->id] = entry;
    }
    return describe(*entry);
  }

  void delete_session(const std::string& id) {
    std::shared_ptr<Entry> e;
    {
      std::lock_guard lk(sessions_mu_);
      const auto it = sessions_.find(id);
      if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + id);
      e = it->second;
      sessions_.erase(it);
    }
    close_entry(*e);
  }

  /// Processes one agent message; returns the replies (also published to
  /// the session's event stream).
  nlohmann::json send(const std::string& id, const nlohmann::json& msg) {
    auto e = entry(id);
    std::lock_guard lk(e->mu);
    e->touch();
    std::vector<proto::SimMessage> out;
    try {
      out = e->session->step(proto::agent_message_from_json(msg));
    } catch (const Error& err) {
      out = {proto::ErrorMsg{std::string(to_string(err.code())), err.what()}};
    }
    return publish(*e, out);
  }

  nlohmann::json commander(const std::string& id, const std::string& text) {
    auto e = entry(id);
    std::lock_guard lk(e->mu);
    e->touch();
    return publish(*e, e->session->commander(text));
  }

  /// Events with index >= since, waiting up to `timeout` for new ones.
  nlohmann::json events(const std::string& id, std::size_t since, std::chrono::milliseconds timeout) {
    auto e = entry(id);
    std::unique_lock lk(e->mu);
    e->touch();
    e->cv.wait_for(lk, timeout, [&] { return e->events.size() > since || e->closed; });
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = since; i < e->events.size(); ++i) out.push_back(e->events[i]);
    return {{"messages", std::move(out)}, {"next", e->events.size()}};
  }

  nlohmann::json state(const std::string& id) {
    auto e = entry(id);
    std::lock_guard lk(e->mu);
    const Session& s = *e->session;
    nlohmann::json clicks = nlohmann::json::array();
    for (const auto& c : s.clicks()) {
      clicks.push_back({{"x", c.world_point.x}, {"y", c.world_point.y}, {"width_at_click", c.width_at_click}});
    }
    nlohmann::json j = describe(*e);
    j["step"] = s.step_count();
    j["round"] = s.round();
    j["drone"] = to_json(s.drone());
    j["transcript"] = to_json(s.transcript_episode(e->id))["rounds"];
    j["attention_clicks"] = std::move(clicks);
    j["events"] = e->events.size();
    j["task"] = {{"episode_id", s.task().task.episode_id},
                 {"env_id", s.task().task.env_id},
                 {"kind", s.task().task.kind == TaskKind::ANDH ? "andh" : "andh-full"},
                 {"max_steps", s.config().max_steps}};
    if (s.outcome()) j["success"] = *s.outcome();
    return j;
  }

  std::vector<std::uint8_t> observation_png(const std::string& id, std::optional<int> step) {
    auto e = entry(id);
    std::lock_guard lk(e->mu);
    return encode_png(*e->session->observation_at(step.value_or(e->session->step_count())).image);
  }

  std::vector<std::uint8_t> overview_png(const std::string& id, std::optional<int> round) {
    auto e = entry(id);
    std::lock_guard lk(e->mu);
    return encode_png(render_overview(*e->session, round.value_or(e->session->round())).image);
  }

  nlohmann::json list_sessions() {
    std::vector<std::shared_ptr<Entry>> all;
    {
      std::lock_guard lk(sessions_mu_);
      for (auto& [id, e] : sessions_) all.push_back(e);
    }
    nlohmann::json out = nlohmann::json::array();
    for (auto& e : all) {
      std::lock_guard lk(e->mu);
      out.push_back(describe(*e));
    }
    return out;
  }

  /// Live sessions waiting for the commander: the opening instruction or an
  /// answer to the follower's latest question.
  nlohmann::json pending() {
    std::vector<std::shared_ptr<Entry>> all;
    {
      std::lock_guard lk(sessions_mu_);
      for (auto& [id, e] : sessions_) all.push_back(e);
    }
    nlohmann::json out = nlohmann::json::array();
    for (auto& e : all) {
      std::lock_guard lk(e->mu);
      const Session& s = *e->session;
      if (s.config().mode != SessionConfig::Mode::Live) continue;
      nlohmann::json item = {{"session_id", e->id}, {"round", s.round()},
                             {"overview", "/api/sessions/" + e->id + "/overview.png?round=" + std::to_string(s.round())}};
      if (s.phase() == Phase::AwaitingInstruction) {
        item["kind"] = "instruction";
      } else if (s.phase() == Phase::AwaitingAnswer) {
        item["kind"] = "answer";
        const auto& q = s.transcript().back().follower;
        item["question"] = q ? nlohmann::json(*q) : nlohmann::json(nullptr);
      } else {
        continue;
      }
      out.push_back(std::move(item));
    }
    return out;
  }

  nlohmann::json ui_config() const {
    nlohmann::json keys = {{"w", "forward"}, {"s", "back"},   {"a", "left"},   {"d", "right"},
                           {"q", "rot_ccw"}, {"e", "rot_cw"}, {"1", "alt_up"}, {"2", "alt_down"}};
    return {{"shortcut_questions", shortcut_questions(cfg_.shortcut_questions)},
            {"iou_guide_fraction", iou_guide_fraction()},
            {"success_iou", kSuccessIou},
            {"attention_radius_fraction", 0.1},
            {"resolution", defaults_.resolution},
            {"key_bindings", std::move(keys)},
            {"stop_key", "Escape"}};
  }

 private:
  struct Entry {
    std::mutex mu;
    std::condition_variable cv;
    std::string id, role, image_mode, created_at;
    std::unique_ptr<Session> session;
    std::vector<nlohmann::json> events;
    bool closed = false;
    bool saved = false;
    std::atomic<std::int64_t> last_active{0};

    void touch() {
      last_active = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now().time_since_epoch())
                        .count();
    }
  };

  static std::string now_iso8601() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    ::gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  std::string new_session_id() {
    static thread_local std::mt19937_64 gen{std::random_device{}()};
    std::ostringstream s;
    s << "s" << ++session_counter_ << "-" << std::hex << (gen() & 0xffffffffu);
    return s.str();
  }

  std::shared_ptr<Entry> entry(const std::string& id) {
    std::lock_guard lk(sessions_mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + id);
    return it->second;
  }

  static void close_entry(Entry& e) {
    std::lock_guard lk(e.mu);
    e.closed = true;
    e.cv.notify_all();
  }

  nlohmann::json describe(const Entry& e) const {
    return {{"session_id", e.id},
            {"created_at", e.created_at},
            {"role", e.role},
            {"image_mode", e.image_mode},
            {"phase", to_string(e.session->phase())},
            {"socket_port", socket_port_}};
  }

  // Caller holds e.mu.
  nlohmann::json publish(Entry& e, const std::vector<proto::SimMessage>& msgs) {
    const std::string id = e.id;
    const proto::ImageEncoder enc =
        e.image_mode == "inline"
            ? proto::inline_images()
            : proto::image_refs([id](int step) {
                return "/api/sessions/" + id + "/observation.png?step=" + std::to_string(step);
              });
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : msgs) {
      auto j = proto::to_json(m, enc);
      e.events.push_back(j);
      out.push_back(std::move(j));
    }
    if (e.session->phase() == Phase::Done && !e.saved && !cfg_.transcript_dir.empty()) {
      std::lock_guard lk(transcript_mu_);
      append_episode(e.session->transcript_episode(e.id), cfg_.transcript_dir / "transcripts.jsonl");
      e.saved = true;
    }
    e.cv.notify_all();
    return {{"messages", std::move(out)}};
  }

  // ------------------------------------------------------------ HTTP

  template <typename F>
  void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      res.status = http_status(e.code());
      res.set_content(nlohmann::json{{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}}.dump(),
                      "application/json");
    } catch (const nlohmann::json::exception& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", {{"code", "InvalidArgument"}, {"message", e.what()}}}}.dump(),
                      "application/json");
    }
  }

  static nlohmann::json body(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::InvalidArgument, std::string("body is not valid JSON: ") + e.what());
    }
  }

  static std::optional<int> int_param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    try {
      return std::stoi(req.get_param_value(name));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, std::string("parameter ") + name + " must be an integer");
    }
  }

  static void json_reply(httplib::Response& res, const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static void png_reply(httplib::Response& res, const std::vector<std::uint8_t>& png) {
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }

  void routes() {
    using httplib::Request;
    using httplib::Response;
    http_.Get("/api/health", [this](const Request&, Response& res) {
      json_reply(res, {{"status", "ok"}, {"version", kVersion}, {"sessions", session_count()}});
    });
    http_.Get("/api/environments", [this](const Request&, Response& res) {
      guarded(res, [&] { json_reply(res, {{"environments", envs_.list()}}); });
    });
    http_.Get("/api/ui-config", [this](const Request&, Response& res) { json_reply(res, ui_config()); });
    http_.Get("/api/episodes", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const std::string split = req.has_param("split") ? req.get_param_value("split") : "";
        const int offset = std::max(0, int_param(req, "offset").value_or(0));
        const int limit = std::max(0, int_param(req, "limit").value_or(100));
        nlohmann::json list = nlohmann::json::array();
        int matched = 0;
        for (const auto& ep : episodes_) {
          if (!split.empty() && to_string(ep.split) != split) continue;
          if (matched++ < offset || static_cast<int>(list.size()) >= limit) continue;
          list.push_back({{"episode_id", ep.episode_id},
                          {"env_id", ep.env_id},
                          {"split", to_string(ep.split)},
                          {"rounds", ep.round_count()}});
        }
        json_reply(res, {{"dataset", cfg_.dataset.string()}, {"total", matched}, {"episodes", std::move(list)}});
      });
    });
    http_.Get(R"(/api/episodes/([^/]+)/overview\.png)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const auto it = episode_index_.find(req.matches[1].str());
        if (it == episode_index_.end()) throw Error(ErrorCode::UnknownEpisode, "unknown episode " + req.matches[1].str());
        const Episode& ep = episodes_[it->second];
        const auto env = envs_.get(ep.env_id);
        png_reply(res, encode_png(render_overview(env->env, defaults_.camera, ep, int_param(req, "round").value_or(0)).image));
      });
    });
    http_.Get("/api/sessions", [this](const Request&, Response& res) {
      guarded(res, [&] { json_reply(res, {{"sessions", list_sessions()}}); });
    });
    http_.Get("/api/pending", [this](const Request&, Response& res) {
      guarded(res, [&] { json_reply(res, {{"pending", pending()}}); });
    });
    http_.Post("/api/sessions", [this](const Request& req, Response& res) {
      guarded(res, [&] { json_reply(res, create_session(body(req)), 201); });
    });
    http_.Delete(R"(/api/sessions/([^/]+))", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        delete_session(req.matches[1].str());
        json_reply(res, {{"deleted", req.matches[1].str()}});
      });
    });
    http_.Get(R"(/api/sessions/([^/]+)/state)", [this](const Request& req, Response& res) {
      guarded(res, [&] { json_reply(res, state(req.matches[1].str())); });
    });
    http_.Post(R"(/api/sessions/([^/]+)/messages)", [this](const Request& req, Response& res) {
      guarded(res, [&] { json_reply(res, send(req.matches[1].str(), body(req))); });
    });
    http_.Post(R"(/api/sessions/([^/]+)/commander)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const auto b = body(req);
        if (!b.contains("text") || !b.at("text").is_string()) throw Error(ErrorCode::InvalidArgument, "need text");
        json_reply(res, commander(req.matches[1].str(), b.at("text").get<std::string>()));
      });
    });
    http_.Get(R"(/api/sessions/([^/]+)/events)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const int since = std::max(0, int_param(req, "since").value_or(0));
        const int timeout = std::clamp(int_param(req, "timeout_ms").value_or(25000), 0, 60000);
        json_reply(res, events(req.matches[1].str(), static_cast<std::size_t>(since), std::chrono::milliseconds(timeout)));
      });
    });
    http_.Get(R"(/api/sessions/([^/]+)/observation\.png)", [this](const Request& req, Response& res) {
      guarded(res, [&] { png_reply(res, observation_png(req.matches[1].str(), int_param(req, "step"))); });
    });
    http_.Get(R"(/api/sessions/([^/]+)/overview\.png)", [this](const Request& req, Response& res) {
      guarded(res, [&] { png_reply(res, overview_png(req.matches[1].str(), int_param(req, "round"))); });
    });
    http_.Get(R"(/api/sessions/([^/]+)/trace)", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        auto e = entry(req.matches[1].str());
        std::lock_guard lk(e->mu);
        json_reply(res, to_json(e->session->trace()));
      });
    });
    if (!cfg_.static_dir.empty()) http_.set_mount_point("/", cfg_.static_dir.string());
  }

  std::size_t session_count() {
    std::lock_guard lk(sessions_mu_);
    return sessions_.size();
  }

  // ------------------------------------------------------------ socket

  void open_socket_listener() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error(ErrorCode::IoError, "socket() failed");
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(cfg_.socket_port));
    if (::inet_pton(AF_INET, cfg_.host.c_str(), &addr.sin_addr) != 1) addr.sin_addr.s_addr = htonl(INADDR_ANY);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
      ::close(listen_fd_);
      throw Error(ErrorCode::IoError, "cannot bind socket port " + std::to_string(cfg_.socket_port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    socket_port_ = ntohs(addr.sin_port);
  }

  void accept_loop() {
    while (running_) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (!running_) break;
        continue;
      }
      std::lock_guard lk(conn_mu_);
      conn_fds_.push_back(fd);
      conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
    }
  }

  // First frame: {"type":"Attach","session_id":...,"since":N}. Afterwards
  // the client sends agent messages and receives every session event.
  void serve_connection(int fd) {
    std::shared_ptr<Entry> e;
    try {
      const auto hello = proto::read_frame(fd);
      if (!hello || hello->value("type", "") != "Attach" || !hello->contains("session_id")) {
        throw Error(ErrorCode::ProtocolViolation, "first frame must be Attach");
      }
      e = entry(hello->at("session_id").get<std::string>());
      const std::size_t since = hello->value("since", std::size_t{0});
      std::thread writer([this, fd, e, since] { push_events(fd, e, since); });
      try {
        while (running_) {
          const auto msg = proto::read_frame(fd);
          if (!msg) break;
          send(e->id, *msg);
        }
      } catch (const Error&) {
      }
      ::shutdown(fd, SHUT_RDWR);
      {
        std::lock_guard lk(e->mu);
        e->cv.notify_all();
      }
      writer.join();
    } catch (const Error& err) {
      proto::write_frame(fd, proto::to_json(proto::SimMessage{proto::ErrorMsg{std::string(to_string(err.code())), err.what()}},
                                            proto::inline_images()));
    }
    forget_connection(fd);
  }

  void push_events(int fd, const std::shared_ptr<Entry>& e, std::size_t next) {
    for (;;) {
      std::vector<nlohmann::json> batch;
      {
        std::unique_lock lk(e->mu);
        e->cv.wait_for(lk, std::chrono::milliseconds(200),
                       [&] { return e->events.size() > next || e->closed || !running_; });
        if (e->events.size() <= next && (e->closed || !running_)) return;
        for (; next < e->events.size(); ++next) batch.push_back(e->events[next]);
      }
      for (const auto& j : batch) {
        if (!proto::write_frame(fd, j)) return;
      }
      char probe;
      if (::recv(fd, &probe, 1, MSG_PEEK | MSG_DONTWAIT) == 0) return;
    }
  }

  void forget_connection(int fd) {
    std::lock_guard lk(conn_mu_);
    std::erase(conn_fds_, fd);
    ::close(fd);
  }

  void reap_loop() {
    const auto period = std::chrono::milliseconds(
        static_cast<int>(std::clamp(cfg_.idle_timeout_s * 250.0, 50.0, 1000.0)));
    std::unique_lock lk(sessions_mu_);
    while (running_) {
      reap_cv_.wait_for(lk, period);
      if (!running_) break;
      const std::int64_t now = std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::steady_clock::now().time_since_epoch())
                                   .count();
      const auto limit = static_cast<std::int64_t>(cfg_.idle_timeout_s * 1000.0);
      for (auto it = sessions_.begin(); it != sessions_.end();) {
        if (now - it->second->last_active > limit) {
          close_entry(*it->second);
          it = sessions_.erase(it);
        } else {
          ++it;
        }
      }
    }
  }

  ServiceConfig cfg_;
  EnvironmentStore envs_;
  SessionConfig defaults_;
  std::vector<Episode> episodes_;
  std::map<std::string, std::size_t> episode_index_;

  httplib::Server http_;
  int http_port_ = -1;
  int listen_fd_ = -1;
  int socket_port_ = -1;
  std::atomic<bool> running_{false};
  std::mutex stop_mu_;
  std::atomic<std::uint64_t> session_counter_{0};

  std::mutex sessions_mu_;
  std::condition_variable reap_cv_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mutex transcript_mu_;

  std::mutex conn_mu_;
  std::vector<int> conn_fds_;
  std::vector<std::thread> conn_threads_;
  std::vector<std::thread> threads_;
};

}  // namespace avdn
