#include <gtest/gtest.h>

#include <sstream>

#include <sys/socket.h>
#include <unistd.h>

#include "avdn/protocol.hpp"

using namespace avdn;
namespace p = avdn::proto;

TEST(Protocol, AgentMessagesRoundTrip) {
  const std::vector<p::AgentMessage> msgs = {
      p::Key{KeyCommand::RotCcw},  p::Waypoint{{0.25, 0.75, 88.5}}, p::Question{"where should I go?"},
      p::Claim{},                  p::AttentionClick{10.5, 200.0},  p::AttentionRemove{0.0, 224.0},
  };
  for (const auto& m : msgs) {
    const auto j = p::to_json(m);
    const auto back = p::agent_message_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back, m) << j.dump();
  }
}

TEST(Protocol, AgentMessageWireNames) {
  EXPECT_EQ(p::to_json(p::Key{KeyCommand::AltUp}).dump(), R"({"key":"alt_up","type":"Key"})");
  EXPECT_EQ(p::to_json(p::Claim{}).dump(), R"({"type":"Claim"})");
}

TEST(Protocol, MalformedAgentMessagesAreViolations) {
  const std::vector<std::string> bad = {
      R"([])",
      R"({"key":"forward"})",
      R"({"type":"Key","key":"up"})",
      R"({"type":"Waypoint","x":0.5,"y":"a","h":50})",
      R"({"type":"Waypoint","x":0.5,"h":50})",
      R"({"type":"Question"})",
      R"({"type":"Teleport"})",
  };
  for (const auto& s : bad) {
    try {
      p::agent_message_from_json(nlohmann::json::parse(s));
      ADD_FAILURE() << s;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ProtocolViolation) << s;
    }
  }
}

TEST(Protocol, SimMessagesRoundTripWithInlineImages) {
  Image img(4, 3);
  img.set(1, 2, {10, 20, 30});
  p::Observation o;
  o.step = 3;
  o.compass_deg = 45.0;
  o.altitude_m = 70.0;
  o.round = 1;
  o.phase = "Navigating";
  o.image = std::make_shared<const Image>(img);
  o.attention = {{1.0, 2.0, 0.4}};
  const auto j = p::to_json(p::SimMessage{o}, p::inline_images());
  EXPECT_EQ(j.at("image").at("encoding"), "png_base64");
  const auto back = std::get<p::Observation>(p::sim_message_from_json(nlohmann::json::parse(j.dump())));
  EXPECT_EQ(back.step, 3);
  EXPECT_EQ(back.phase, "Navigating");
  ASSERT_TRUE(back.image);
  EXPECT_EQ(*back.image, img);
  ASSERT_EQ(back.attention.size(), 1u);
  EXPECT_DOUBLE_EQ(back.attention[0].radius_px, 0.4);

  const auto e = p::sim_message_from_json(p::to_json(p::SimMessage{p::EpisodeEnd{true, {{"steps", 4}}}}, p::inline_images()));
  EXPECT_TRUE(std::get<p::EpisodeEnd>(e).success);
  const auto err = p::sim_message_from_json(p::to_json(p::SimMessage{p::ErrorMsg{"ProtocolViolation", "x"}}, p::inline_images()));
  EXPECT_EQ(std::get<p::ErrorMsg>(err).code, "ProtocolViolation");
}

TEST(Protocol, ImageReferences) {
  p::Observation o;
  o.step = 9;
  o.image = std::make_shared<const Image>(Image(2, 2));
  const auto j = p::to_json(p::SimMessage{o}, p::image_refs([](int s) { return "/img/" + std::to_string(s); }));
  EXPECT_EQ(j.at("image"), (nlohmann::json{{"ref", "/img/9"}}));
  EXPECT_FALSE(std::get<p::Observation>(p::sim_message_from_json(j)).image);
}

TEST(Protocol, EpisodeEndNeedsBooleanSuccess) {
  EXPECT_THROW(p::sim_message_from_json(nlohmann::json::parse(R"({"type":"EpisodeEnd","success":1})")), Error);
}

TEST(Protocol, AwaitsAction) {
  EXPECT_TRUE(p::awaits_action(p::Observation{}));
  EXPECT_TRUE(p::awaits_action(p::ActionRejected{"OutOfBounds"}));
  EXPECT_TRUE(p::awaits_action(p::ErrorMsg{}));
  EXPECT_FALSE(p::awaits_action(p::Dialog{}));
  EXPECT_FALSE(p::awaits_action(p::EpisodeEnd{}));
}

TEST(Framing, BigEndianLengthPrefix) {
  const std::string f = p::encode_frame("abc");
  ASSERT_EQ(f.size(), 7u);
  EXPECT_EQ(f.substr(0, 4), std::string("\0\0\0\x03", 4));
  EXPECT_EQ(p::decode_length(reinterpret_cast<const unsigned char*>("\x01\x02\x03\x04")), 0x01020304u);
}

TEST(Framing, StreamRoundTripAndCleanEof) {
  std::stringstream ss;
  p::write_frame(ss, {{"type", "Claim"}});
  p::write_frame(ss, {{"type", "Key"}, {"key", "back"}});
  EXPECT_EQ(p::read_frame(ss)->at("type"), "Claim");
  EXPECT_EQ(p::read_frame(ss)->at("key"), "back");
  EXPECT_FALSE(p::read_frame(ss).has_value());
}

TEST(Framing, TruncatedAndOversizedFramesAreViolations) {
  std::stringstream truncated(std::string("\0\0\0\x0a{\"a\"", 8));
  EXPECT_THROW(p::read_frame(truncated), Error);
  std::stringstream huge(std::string("\x7f\xff\xff\xff", 4));
  EXPECT_THROW(p::read_frame(huge), Error);
  std::stringstream not_json(p::encode_frame("nope"));
  EXPECT_THROW(p::read_frame(not_json), Error);
}

TEST(Framing, FileDescriptorRoundTrip) {
  int sv[2];
  ASSERT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, sv), 0);
  ASSERT_TRUE(p::write_frame(sv[0], {{"type", "Question"}, {"text", "hi"}}));
  ::close(sv[0]);
  const auto j = p::read_frame(sv[1]);
  ASSERT_TRUE(j);
  EXPECT_EQ(std::get<p::Question>(p::agent_message_from_json(*j)).text, "hi");
  EXPECT_FALSE(p::read_frame(sv[1]).has_value());
  ::close(sv[1]);
}
