/* Copyright 2026 The Contact Skill Workbench Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <chrono>
#include <filesystem>
#include <string>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "csf/teleop.hpp"
#include "doctest.h"

using namespace csf;
namespace fs = std::filesystem;

namespace {

SceneConfig planar() { return load_scene(std::string(CSF_DATA_DIR) + "/scenes/planar_slot.json"); }

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("csf_teleop_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string msg(nlohmann::json j) {
  j["v"] = 1;
  return j.dump();
}

std::string wrench_msg(double fx, double fy, double fz, double tz = 0.0) {
  return msg({{"type", "wrench"}, {"d", {fx, fy, fz, 0.0, 0.0, tz}}});
}

std::string record_msg(const std::string& action) { return msg({{"type", "record"}, {"action", action}}); }

}  // namespace

TEST_CASE("device deflection maps to a clamped object-frame wrench") {
  Vec6 d;
  d << 0.5, -2.0, 0.0, 0.1, 0.0, 3.0;
  const Wrench w = map_device(d, 30.0, 6.0);
  CHECK(w.force.x() == doctest::Approx(15.0));
  CHECK(w.force.y() == doctest::Approx(-30.0));
  CHECK(w.torque.x() == doctest::Approx(0.6));
  CHECK(w.torque.z() == doctest::Approx(6.0));
  CHECK(w.frame == Frame::object);
}

TEST_CASE("without a client the object holds still") {
  TeleopSession s(planar(), TeleopConfig{}, fresh_dir("hold").string(), 1);
  const Pose before = s.sim().state().pose;
  s.advance(2000);
  CHECK((s.sim().state().pose.position - before.position).norm() < 1e-12);
  CHECK(s.time() == doctest::Approx(2.0));
}

TEST_CASE("malformed and foreign frames close the connection") {
  TeleopSession s(planar(), TeleopConfig{}, fresh_dir("bad").string(), 1);
  const int c = s.connect();
  CHECK(s.handle(c, "{nope").close_reason == "bad_json");
  CHECK(s.handle(c, R"({"type":"wrench","d":[0,0,0,0,0,0]})").close_reason == "bad_version");
  CHECK(s.handle(c, R"({"v":2,"type":"wrench","d":[0,0,0,0,0,0]})").close_reason == "bad_version");
  CHECK(s.handle(c, msg({{"type", "teleport"}})).close_reason == "bad_message");
  CHECK(s.handle(c, msg({{"type", "wrench"}, {"d", {1, 2}}})).close_reason == "bad_message");
  CHECK(s.handle(c, msg({{"type", "record"}, {"action", "rewind"}})).close_reason == "bad_message");
}

TEST_CASE("commands latch at record boundaries") {
  TeleopSession s(planar(), TeleopConfig{}, fresh_dir("latch").string(), 1);
  const int c = s.connect();
  s.advance(3);
  CHECK(s.handle(c, wrench_msg(0.5, 0.0, 0.0)).close_reason.empty());
  s.advance(6);
  CHECK(s.applied_wrench().force.norm() == 0.0);
  s.advance(1);
  s.step();
  CHECK(s.applied_wrench().force.x() == doctest::Approx(15.0));
}

TEST_CASE("only one client steers") {
  TeleopSession s(planar(), TeleopConfig{}, fresh_dir("steer").string(), 1);
  const int a = s.connect();
  const int b = s.connect();
  CHECK(s.handle(a, wrench_msg(0.1, 0, 0)).frames.empty());
  const TeleopReply r = s.handle(b, wrench_msg(0.1, 0, 0));
  REQUIRE(r.frames.size() == 1);
  CHECK(r.close_reason.empty());
  CHECK(r.frames[0]["reason"] == "steering_taken");
  s.disconnect(a);
  s.advance(10);
  CHECK(s.applied_wrench().force.norm() == 0.0);
  CHECK(s.handle(b, wrench_msg(0.1, 0, 0)).frames.empty());
  CHECK(s.steerer() == b);
}

TEST_CASE("recording ten seconds gives a record per period and saves a replayable file") {
  const fs::path dir = fresh_dir("record");
  const SceneConfig scene = planar();
  TeleopSession s(scene, TeleopConfig{}, dir.string(), 1);
  const int c = s.connect();
  s.handle(c, wrench_msg(-0.2, 0.05, 0.0, 0.02));
  s.handle(c, record_msg("start"));
  CHECK(s.recording());
  s.advance(10000);
  CHECK(s.buffered_records() == 1000);
  CHECK(s.handle(c, record_msg("stop")).frames.at(0)["ok"] == true);
  CHECK(s.handle(c, record_msg("stop")).frames.at(0)["ok"] == true);
  s.advance(500);
  CHECK(s.buffered_records() == 1000);
  const TeleopReply saved = s.handle(c, record_msg("save"));
  REQUIRE(saved.frames.size() == 1);
  CHECK(saved.frames[0]["ok"] == true);
  const std::string path = saved.frames[0]["path"].get<std::string>();
  CHECK(fs::exists(path));
  const Demonstration demo = read_demo(path);
  CHECK(demo.records.size() == 1000);
  CHECK(demo.meta.source == "human");
  CHECK(replay_deviation(scene, demo) <= 1e-6);
}

TEST_CASE("save without a recording and discard write nothing") {
  const fs::path dir = fresh_dir("discard");
  TeleopSession s(planar(), TeleopConfig{}, dir.string(), 1);
  const int c = s.connect();
  const TeleopReply empty = s.handle(c, record_msg("save"));
  CHECK(empty.frames.at(0)["ok"] == false);
  CHECK(empty.frames.at(0)["reason"] == "empty_buffer");
  s.handle(c, record_msg("start"));
  s.advance(500);
  CHECK(s.buffered_records() == 50);
  s.handle(c, record_msg("discard"));
  CHECK(s.buffered_records() == 0);
  CHECK(!s.recording());
  CHECK(s.handle(c, record_msg("save")).frames.at(0)["reason"] == "empty_buffer");
  CHECK((!fs::exists(dir) || fs::is_empty(dir)));
}

TEST_CASE("reset restarts time and drops the buffer") {
  TeleopSession s(planar(), TeleopConfig{}, fresh_dir("reset").string(), 3);
  const int c = s.connect();
  s.handle(c, record_msg("start"));
  s.advance(100);
  const TeleopReply r = s.handle(c, msg({{"type", "reset"}, {"start", "random"}}));
  CHECK(r.frames.at(0)["ok"] == true);
  CHECK(s.time() == 0.0);
  CHECK(!s.recording());
  CHECK(s.buffered_records() == 0);
  const nlohmann::json f = s.state_frame();
  CHECK(f["v"] == 1);
  CHECK(f["type"] == "state");
  CHECK(f["object_pose"].size() == 7);
  CHECK(f["goal_pose"].size() == 7);
  CHECK(f["outcome"].is_null());
}

namespace {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct Client {
  net::io_context ioc;
  websocket::stream<tcp::socket> ws{ioc};

  explicit Client(unsigned short port) {
    tcp::resolver resolver(ioc);
    net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws.handshake("127.0.0.1", "/teleop");
  }

  void send(const std::string& text) { ws.write(net::buffer(text)); }

  nlohmann::json receive() {
    beast::flat_buffer buf;
    ws.read(buf);
    return nlohmann::json::parse(beast::buffers_to_string(buf.data()));
  }

  template <typename Pred>
  nlohmann::json receive_until(Pred pred) {
    for (int i = 0; i < 500; ++i) {
      nlohmann::json f = receive();
      if (pred(f)) return f;
    }
    throw std::runtime_error("frame never arrived");
  }
};

}  // namespace

TEST_CASE("websocket gateway serves state, steering and recording") {
  const fs::path dir = fresh_dir("server");
  TeleopConfig cfg;
  cfg.port = 0;
  TeleopServer server(planar(), cfg, dir.string(), 5);
  const unsigned short port = server.bind();
  std::thread loop([&] { server.run(); });

  {
    Client a(port);
    const nlohmann::json state = a.receive_until([](const auto& f) { return f["type"] == "state"; });
    CHECK(state["v"] == 1);
    CHECK(state["recording"] == false);

    a.send(wrench_msg(0.0, 0.0, 0.0));
    Client b(port);
    b.send(wrench_msg(0.3, 0.0, 0.0));
    const nlohmann::json rejected = b.receive_until([](const auto& f) { return f["type"] == "error"; });
    CHECK(rejected["reason"] == "steering_taken");
    CHECK(b.receive_until([](const auto& f) { return f["type"] == "state"; })["v"] == 1);

    const auto sent = std::chrono::steady_clock::now();
    a.send(record_msg("start"));
    a.receive_until([](const auto& f) { return f["type"] == "state" && f["recording"] == true; });
    const double round_trip = std::chrono::duration<double>(std::chrono::steady_clock::now() - sent).count();
    CHECK(round_trip < 2.0 / cfg.broadcast_hz);

    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    a.send(record_msg("save"));
    const nlohmann::json saved = a.receive_until([](const auto& f) { return f["type"] == "ack" && f["for"] == "record"; });
    CHECK(saved["ok"] == true);
    CHECK(fs::exists(saved["path"].get<std::string>()));

    b.send(R"({"type":"wrench"})");
    beast::flat_buffer buf;
    beast::error_code ec;
    for (int i = 0; i < 100 && !ec; ++i) b.ws.read(buf, ec);
    CHECK(ec == websocket::error::closed);
    CHECK(b.ws.reason().reason == "bad_version");
  }

  server.stop();
  loop.join();
}
