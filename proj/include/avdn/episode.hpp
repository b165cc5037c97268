#pragma once

// Episode / dialog data model and its JSON Lines serialization. One episode
// per line; see docs/DATASET.md for the schema.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avdn/attention_types.hpp"
#include "avdn/dynamics.hpp"

namespace avdn {

enum class Split { Train, SeenVal, UnseenVal, UnseenTest };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::SeenVal: return "seen_val";
    case Split::UnseenVal: return "unseen_val";
    case Split::UnseenTest: return "unseen_test";
  }
  return "?";
}

inline std::optional<Split> split_from_string(std::string_view s) {
  for (auto v : {Split::Train, Split::SeenVal, Split::UnseenVal, Split::UnseenTest}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

struct DialogRound {
  int T = 0;
  std::string commander;
  std::optional<std::string> follower;
  std::vector<std::string> auto_instructions;
  friend bool operator==(const DialogRound&, const DialogRound&) = default;
};

struct SubTrajectory {
  int T = 0;
  std::vector<DroneState> states;
  friend bool operator==(const SubTrajectory&, const SubTrajectory&) = default;
};

struct Episode {
  std::string episode_id;
  std::string env_id;
  Split split = Split::Train;
  DroneState start;
  AxisRect destination;
  std::vector<DialogRound> rounds;
  std::vector<SubTrajectory> sub_trajectories;
  std::vector<AttentionClick> attention_clicks;
  /// Whether the recorded follower ended with a successful claim.
  std::optional<bool> success;

  std::size_t round_count() const { return rounds.size(); }
  friend bool operator==(const Episode&, const Episode&) = default;
};

// ---------------------------------------------------------------- to JSON

inline nlohmann::json to_json(const DroneState& s) {
  return {{"x", s.position.x}, {"y", s.position.y}, {"heading", s.heading.degrees()}, {"altitude", s.altitude}};
}

inline nlohmann::json to_json(const Episode& ep) {
  using nlohmann::json;
  json j;
  j["episode_id"] = ep.episode_id;
  j["env_id"] = ep.env_id;
  j["split"] = to_string(ep.split);
  j["start"] = to_json(ep.start);
  j["destination"] = rect_to_json(ep.destination);
  j["rounds"] = json::array();
  for (const auto& r : ep.rounds) {
    json jr = {{"T", r.T}, {"commander", r.commander}, {"auto", r.auto_instructions}};
    if (r.follower) jr["follower"] = *r.follower;
    j["rounds"].push_back(std::move(jr));
  }
  j["sub_trajectories"] = json::array();
  for (const auto& s : ep.sub_trajectories) {
    json states = json::array();
    for (const auto& st : s.states) states.push_back(to_json(st));
    j["sub_trajectories"].push_back({{"T", s.T}, {"states", std::move(states)}});
  }
  j["attention_clicks"] = json::array();
  for (const auto& c : ep.attention_clicks) {
    j["attention_clicks"].push_back({{"x", c.world_point.x}, {"y", c.world_point.y}, {"width_at_click", c.width_at_click}});
  }
  if (ep.success) j["success"] = *ep.success;
  return j;
}

// ---------------------------------------------------------------- from JSON

namespace detail {

// Field access that reports failures as SchemaViolation with a JSON pointer.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& j, std::string pointer, std::size_t line)
      : j_(j), ptr_(std::move(pointer)), line_(line) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const { throw SchemaViolation(ptr_.empty() ? "/" : ptr_, what, line_); }
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw SchemaViolation(ptr_ + "/" + key, what, line_);
  }

  bool has(const char* key) const { return j_.contains(key); }

  const nlohmann::json& at(const char* key) const {
    if (!j_.contains(key)) fail(key, "missing required field");
    return j_.at(key);
  }

  double number(const char* key) const {
    const auto& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }

  int integer(const char* key) const {
    const auto& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }

  std::string string(const char* key) const {
    const auto& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  const nlohmann::json& array(const char* key) const {
    const auto& v = at(key);
    if (!v.is_array()) fail(key, "expected an array");
    return v;
  }

  FieldReader child(const char* key) const { return {at(key), ptr_ + "/" + key, line_}; }
  std::string pointer(const std::string& key) const { return ptr_ + "/" + key; }
  std::size_t line() const { return line_; }

 private:
  const nlohmann::json& j_;
  std::string ptr_;
  std::size_t line_;
};

inline DroneState state_from_json(const FieldReader& r) {
  const double heading = r.number("heading");
  if (heading < 0.0 || heading >= 360.0) r.fail("heading", "must lie in [0, 360)");
  const double altitude = r.number("altitude");
  if (!(altitude > 0.0)) r.fail("altitude", "must be positive");
  return {{r.number("x"), r.number("y")}, Heading(heading), altitude};
}

}  // namespace detail

/// Parses and structurally validates one episode record.
inline Episode episode_from_json(const nlohmann::json& j, std::size_t line = 0) {
  using detail::FieldReader;
  const FieldReader r(j, "", line);
  Episode ep;
  ep.episode_id = r.string("episode_id");
  if (ep.episode_id.empty()) r.fail("episode_id", "must be non-empty");
  ep.env_id = r.string("env_id");
  if (ep.env_id.empty()) r.fail("env_id", "must be non-empty");
  const auto split = split_from_string(r.string("split"));
  if (!split) r.fail("split", "must be one of train, seen_val, unseen_val, unseen_test");
  ep.split = *split;
  ep.start = detail::state_from_json(r.child("start"));

  const FieldReader dest = r.child("destination");
  ep.destination = {{dest.number("min_x"), dest.number("min_y")}, {dest.number("max_x"), dest.number("max_y")}};
  if (!ep.destination.valid()) r.fail("destination", "requires min_x < max_x and min_y < max_y");

  const auto& rounds = r.array("rounds");
  if (rounds.empty()) r.fail("rounds", "an episode needs at least one dialog round (M >= 1)");
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const FieldReader rr(rounds[i], r.pointer("rounds/" + std::to_string(i)), line);
    DialogRound d;
    d.T = rr.integer("T");
    if (d.T != static_cast<int>(i)) rr.fail("T", "round indices must be 0..M-1 in order");
    d.commander = rr.string("commander");
    if (i == 0 && d.commander.empty()) rr.fail("commander", "round 0 must carry the initial instruction");
    if (rr.has("follower")) d.follower = rr.string("follower");
    const auto& autos = rr.array("auto");
    for (std::size_t k = 0; k < autos.size(); ++k) {
      if (!autos[k].is_string()) rr.fail("auto/" + std::to_string(k), "expected a string");
      d.auto_instructions.push_back(autos[k].get<std::string>());
    }
    ep.rounds.push_back(std::move(d));
  }

  const auto& subs = r.array("sub_trajectories");
  if (subs.size() != rounds.size()) {
    r.fail("sub_trajectories", "expected one sub-trajectory per dialog round (" + std::to_string(rounds.size()) + ")");
  }
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const FieldReader sr(subs[i], r.pointer("sub_trajectories/" + std::to_string(i)), line);
    SubTrajectory s;
    s.T = sr.integer("T");
    if (s.T != static_cast<int>(i)) sr.fail("T", "sub-trajectory indices must be 0..M-1 in order");
    const auto& states = sr.array("states");
    if (states.empty()) sr.fail("states", "a sub-trajectory needs at least its initial state");
    for (std::size_t k = 0; k < states.size(); ++k) {
      s.states.push_back(detail::state_from_json(
          FieldReader(states[k], sr.pointer("states/" + std::to_string(k)), line)));
    }
    ep.sub_trajectories.push_back(std::move(s));
  }

  if (r.has("attention_clicks")) {
    const auto& clicks = r.array("attention_clicks");
    for (std::size_t i = 0; i < clicks.size(); ++i) {
      const FieldReader cr(clicks[i], r.pointer("attention_clicks/" + std::to_string(i)), line);
      AttentionClick c{{cr.number("x"), cr.number("y")}, cr.number("width_at_click")};
      if (!(c.width_at_click > 0.0)) cr.fail("width_at_click", "must be positive");
      ep.attention_clicks.push_back(c);
    }
  }
  if (r.has("success")) {
    if (!r.at("success").is_boolean()) r.fail("success", "expected a boolean");
    ep.success = r.at("success").get<bool>();
  }
  return ep;
}

// ---------------------------------------------------------------- files

inline std::vector<Episode> parse_dataset(std::istream& in) {
  std::vector<Episode> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaViolation("/", std::string("invalid JSON: ") + e.what(), lineno);
    }
    out.push_back(episode_from_json(j, lineno));
  }
  return out;
}

inline std::vector<Episode> load_dataset(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open dataset " + path.string());
  return parse_dataset(f);
}

inline void write_dataset(std::ostream& out, const std::vector<Episode>& episodes) {
  for (const auto& ep : episodes) out << to_json(ep).dump() << '\n';
}

inline void save_dataset(const std::vector<Episode>& episodes, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write dataset " + path.string());
  write_dataset(f, episodes);
}

inline void append_episode(const Episode& ep, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::app);
  if (!f) throw Error(ErrorCode::IoError, "cannot append to " + path.string());
  f << to_json(ep).dump() << '\n';
}

}  // namespace avdn
