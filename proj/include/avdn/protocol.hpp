#pragma once

// Wire schema between agents and the simulator. Every frame is a JSON object
// with a "type" discriminator, carried as a 4-byte big-endian length followed
// by UTF-8 JSON.

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "avdn/dynamics.hpp"
#include "avdn/image.hpp"

namespace avdn::proto {

using nlohmann::json;

// ---------------------------------------------------------------- agent -> sim

struct Key {
  KeyCommand key;
  friend bool operator==(const Key&, const Key&) = default;
};
struct Waypoint {
  avdn::Waypoint w;
  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};
struct Question {
  std::string text;
  friend bool operator==(const Question&, const Question&) = default;
};
struct Claim {
  friend bool operator==(const Claim&, const Claim&) = default;
};
struct AttentionClick {
  double px = 0.0, py = 0.0;
  friend bool operator==(const AttentionClick&, const AttentionClick&) = default;
};
struct AttentionRemove {
  double px = 0.0, py = 0.0;
  friend bool operator==(const AttentionRemove&, const AttentionRemove&) = default;
};

using AgentMessage = std::variant<Key, Waypoint, Question, Claim, AttentionClick, AttentionRemove>;

// ---------------------------------------------------------------- sim -> agent

/// Attention disk in observation pixel coordinates.
struct Circle {
  double px = 0.0, py = 0.0, radius_px = 0.0;
  friend bool operator==(const Circle&, const Circle&) = default;
};

struct Observation {
  int step = 0;
  double compass_deg = 0.0;
  double altitude_m = 0.0;
  int round = 0;
  std::string phase;
  std::shared_ptr<const Image> image;
  std::vector<Circle> attention;
};
struct Dialog {
  std::string role;  // "commander" or "follower"
  std::string text;
  int round = 0;
};
struct AutoInstruction {
  std::string text;
};
struct ActionRejected {
  std::string reason;
};
struct EpisodeEnd {
  bool success = false;
  json metrics = json::object();
};
/// Reply to a message that was illegal in the current phase or malformed.
struct ErrorMsg {
  std::string code;
  std::string message;
};

using SimMessage = std::variant<Observation, Dialog, AutoInstruction, ActionRejected, EpisodeEnd, ErrorMsg>;

inline const char* type_name(const SimMessage& m) {
  static constexpr const char* kNames[] = {"Observation",    "Dialog",     "AutoInstruction",
                                           "ActionRejected", "EpisodeEnd", "Error"};
  return kNames[m.index()];
}

/// The agent is expected to send its next message after one of these.
inline bool awaits_action(const SimMessage& m) {
  return std::holds_alternative<Observation>(m) || std::holds_alternative<ActionRejected>(m) ||
         std::holds_alternative<ErrorMsg>(m);
}

// ---------------------------------------------------------------- JSON

namespace detail {

[[noreturn]] inline void violation(const std::string& what) { throw Error(ErrorCode::ProtocolViolation, what); }

inline double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) violation(std::string("field '") + key + "' must be a number");
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v)) violation(std::string("field '") + key + "' must be finite");
  return v;
}

inline std::string text(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) violation(std::string("field '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline json to_json(const AgentMessage& m) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Key>) return {{"type", "Key"}, {"key", to_string(v.key)}};
        if constexpr (std::is_same_v<T, Waypoint>) return {{"type", "Waypoint"}, {"x", v.w.x}, {"y", v.w.y}, {"h", v.w.h}};
        if constexpr (std::is_same_v<T, Question>) return {{"type", "Question"}, {"text", v.text}};
        if constexpr (std::is_same_v<T, Claim>) return {{"type", "Claim"}};
        if constexpr (std::is_same_v<T, AttentionClick>) return {{"type", "AttentionClick"}, {"px", v.px}, {"py", v.py}};
        if constexpr (std::is_same_v<T, AttentionRemove>) return {{"type", "AttentionRemove"}, {"px", v.px}, {"py", v.py}};
      },
      m);
}

inline AgentMessage agent_message_from_json(const json& j) {
  if (!j.is_object()) detail::violation("message must be a JSON object");
  const std::string type = detail::text(j, "type");
  if (type == "Key") {
    const auto k = key_from_string(detail::text(j, "key"));
    if (!k) detail::violation("unknown key '" + j.at("key").get<std::string>() + "'");
    return Key{*k};
  }
  if (type == "Waypoint") return Waypoint{{detail::number(j, "x"), detail::number(j, "y"), detail::number(j, "h")}};
  if (type == "Question") return Question{detail::text(j, "text")};
  if (type == "Claim") return Claim{};
  if (type == "AttentionClick") return AttentionClick{detail::number(j, "px"), detail::number(j, "py")};
  if (type == "AttentionRemove") return AttentionRemove{detail::number(j, "px"), detail::number(j, "py")};
  detail::violation("unknown agent message type '" + type + "'");
}

/// Turns an observation image into its JSON reference.
using ImageEncoder = std::function<json(const Observation&)>;

inline ImageEncoder inline_images() {
  return [](const Observation& o) -> json {
    return {{"encoding", "png_base64"}, {"data", base64_encode(encode_png(*o.image))}};
  };
}

inline ImageEncoder image_refs(std::function<std::string(int step)> ref) {
  return [ref = std::move(ref)](const Observation& o) -> json { return {{"ref", ref(o.step)}}; };
}

inline json to_json(const SimMessage& m, const ImageEncoder& images) {
  return std::visit(
      [&](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Observation>) {
          json circles = json::array();
          for (const auto& c : v.attention) circles.push_back({{"px", c.px}, {"py", c.py}, {"radius_px", c.radius_px}});
          return {{"type", "Observation"}, {"step", v.step},        {"compass_deg", v.compass_deg},
                  {"altitude_m", v.altitude_m}, {"round", v.round}, {"phase", v.phase},
                  {"image", images(v)},         {"attention", std::move(circles)}};
        }
        if constexpr (std::is_same_v<T, Dialog>) {
          return {{"type", "Dialog"}, {"role", v.role}, {"text", v.text}, {"round", v.round}};
        }
        if constexpr (std::is_same_v<T, AutoInstruction>) return {{"type", "AutoInstruction"}, {"text", v.text}};
        if constexpr (std::is_same_v<T, ActionRejected>) return {{"type", "ActionRejected"}, {"reason", v.reason}};
        if constexpr (std::is_same_v<T, EpisodeEnd>) {
          return {{"type", "EpisodeEnd"}, {"success", v.success}, {"metrics", v.metrics}};
        }
        if constexpr (std::is_same_v<T, ErrorMsg>) return {{"type", "Error"}, {"code", v.code}, {"message", v.message}};
      },
      m);
}

/// Client-side decoding. Inline images are decoded; referenced images are
/// left empty.
inline SimMessage sim_message_from_json(const json& j) {
  if (!j.is_object()) detail::violation("message must be a JSON object");
  const std::string type = detail::text(j, "type");
  if (type == "Observation") {
    Observation o;
    o.step = static_cast<int>(detail::number(j, "step"));
    o.compass_deg = detail::number(j, "compass_deg");
    o.altitude_m = detail::number(j, "altitude_m");
    o.round = static_cast<int>(detail::number(j, "round"));
    o.phase = detail::text(j, "phase");
    const auto& img = j.at("image");
    if (img.contains("data")) o.image = std::make_shared<Image>(decode_png(base64_decode(detail::text(img, "data"))));
    for (const auto& c : j.at("attention")) {
      o.attention.push_back({detail::number(c, "px"), detail::number(c, "py"), detail::number(c, "radius_px")});
    }
    return o;
  }
  if (type == "Dialog") {
    return Dialog{detail::text(j, "role"), detail::text(j, "text"), static_cast<int>(detail::number(j, "round"))};
  }
  if (type == "AutoInstruction") return AutoInstruction{detail::text(j, "text")};
  if (type == "ActionRejected") return ActionRejected{detail::text(j, "reason")};
  if (type == "EpisodeEnd") {
    if (!j.contains("success") || !j.at("success").is_boolean()) detail::violation("field 'success' must be a boolean");
    return EpisodeEnd{j.at("success").get<bool>(), j.value("metrics", json::object())};
  }
  if (type == "Error") return ErrorMsg{detail::text(j, "code"), detail::text(j, "message")};
  detail::violation("unknown simulator message type '" + type + "'");
}

// ---------------------------------------------------------------- framing

inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

inline std::string encode_frame(const std::string& payload) {
  if (payload.size() > kMaxFrameBytes) throw Error(ErrorCode::ProtocolViolation, "frame too large");
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(payload.size() + 4);
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((n >> shift) & 0xff));
  out += payload;
  return out;
}

inline std::uint32_t decode_length(const unsigned char* b) {
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

inline void write_frame(std::ostream& out, const json& j) {
  out << encode_frame(j.dump());
  out.flush();
}

/// Returns nullopt on a clean end of stream before a new frame.
inline std::optional<json> read_frame(std::istream& in) {
  unsigned char head[4];
  in.read(reinterpret_cast<char*>(head), 4);
  if (in.gcount() == 0) return std::nullopt;
  if (in.gcount() != 4) throw Error(ErrorCode::ProtocolViolation, "truncated frame header");
  const std::uint32_t n = decode_length(head);
  if (n > kMaxFrameBytes) throw Error(ErrorCode::ProtocolViolation, "frame too large");
  std::string body(n, '\0');
  in.read(body.data(), n);
  if (static_cast<std::uint32_t>(in.gcount()) != n) throw Error(ErrorCode::ProtocolViolation, "truncated frame body");
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ProtocolViolation, std::string("frame is not valid JSON: ") + e.what());
  }
}

// File-descriptor variants for pipes and sockets.

inline bool write_all(int fd, const char* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::write(fd, data, n);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) return false;
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

inline bool read_all(int fd, char* data, std::size_t n) {
  while (n > 0) {
    const ssize_t r = ::read(fd, data, n);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    data += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

inline bool write_frame(int fd, const json& j) {
  const std::string f = encode_frame(j.dump());
  return write_all(fd, f.data(), f.size());
}

inline std::optional<json> read_frame(int fd) {
  unsigned char head[4];
  if (!read_all(fd, reinterpret_cast<char*>(head), 4)) return std::nullopt;
  const std::uint32_t n = decode_length(head);
  if (n > kMaxFrameBytes) throw Error(ErrorCode::ProtocolViolation, "frame too large");
  std::string body(n, '\0');
  if (!read_all(fd, body.data(), n)) throw Error(ErrorCode::ProtocolViolation, "truncated frame body");
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ProtocolViolation, std::string("frame is not valid JSON: ") + e.what());
  }
}

}  // namespace avdn::proto
