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

#include "csf/teleop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <map>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "csf/error.hpp"
#include "csf/json_util.hpp"
#include "csf/log.hpp"

namespace csf {

namespace {

nlohmann::json frame(const char* type) { return {{"v", kTeleopProtocolVersion}, {"type", type}}; }

TeleopReply close_with(const std::string& reason) {
  TeleopReply r;
  r.close_reason = reason;
  return r;
}

TeleopReply single(nlohmann::json f) {
  TeleopReply r;
  r.frames.push_back(std::move(f));
  return r;
}

nlohmann::json ack(const std::string& what, bool ok) {
  nlohmann::json a = frame("ack");
  a["for"] = what;
  a["ok"] = ok;
  return a;
}

}  // namespace

Wrench map_device(const Vec6& deflection, double gain_lin, double gain_rot) {
  const Vec6 d = deflection.cwiseMax(-1.0).cwiseMin(1.0);
  return Wrench{gain_lin * d.head<3>(), gain_rot * d.tail<3>(), Frame::object};
}

TeleopSession::TeleopSession(SceneConfig scene, TeleopConfig cfg, std::string out_dir, std::uint64_t seed)
    : scene_(std::move(scene)), cfg_(std::move(cfg)), out_dir_(std::move(out_dir)), rng_(seed), sim_(scene_) {
  cfg_.validate();
  const double ratio = 1.0 / (cfg_.record_hz * scene_.sim_dt);
  per_record_ = static_cast<int>(std::lround(ratio));
  if (per_record_ < 1 || std::abs(ratio - per_record_) > 1e-9) {
    throw Error("bad_config", "recording period must be a whole number of simulation steps");
  }
  Pose start = scene_.goal_pose;
  start.position += scene_.approach_axis * (scene_.entrance_distance + 0.02);
  reset_to(start);
}

int TeleopSession::connect() { return next_client_++; }

void TeleopSession::disconnect(int client) {
  if (steerer_ != client) return;
  steerer_ = 0;
  pending_ = Wrench{Vec3::Zero(), Vec3::Zero(), Frame::object};
}

void TeleopSession::reset_to(const Pose& pose) {
  sim_.reset(pose);
  steps_ = 0;
  pending_ = applied_ = Wrench{Vec3::Zero(), Vec3::Zero(), Frame::object};
  recording_ = false;
  recorded_ = 0;
  recorder_.reset();
}

TeleopReply TeleopSession::handle(int client, const std::string& text) {
  nlohmann::json msg;
  try {
    msg = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    return close_with("bad_json");
  }
  if (!msg.is_object()) return close_with("bad_message");
  if (!msg.contains("v") || msg.at("v") != kTeleopProtocolVersion) return close_with("bad_version");
  if (!msg.contains("type") || !msg.at("type").is_string()) return close_with("bad_message");
  const std::string type = msg.at("type").get<std::string>();
  if (type != "wrench" && type != "reset" && type != "record") return close_with("bad_message");
  if (steerer_ == 0) steerer_ = client;
  if (steerer_ != client) {
    nlohmann::json e = frame("error");
    e["for"] = type;
    e["reason"] = "steering_taken";
    return single(std::move(e));
  }
  try {
    if (type == "wrench") return on_wrench(msg);
    if (type == "reset") return on_reset(msg);
    return on_record(msg);
  } catch (const nlohmann::json::exception&) {
    return close_with("bad_message");
  }
}

TeleopReply TeleopSession::on_wrench(const nlohmann::json& msg) {
  const auto& d = msg.at("d");
  if (!d.is_array() || d.size() != 6) return close_with("bad_message");
  Vec6 v;
  for (int i = 0; i < 6; ++i) {
    if (!d[i].is_number()) return close_with("bad_message");
    v[i] = d[i].get<double>();
  }
  if (!v.allFinite()) return close_with("bad_message");
  pending_ = map_device(v, cfg_.gain_lin, cfg_.gain_rot);
  return {};
}

TeleopReply TeleopSession::on_reset(const nlohmann::json& msg) {
  const std::string start = json_util::value_or<std::string>(msg, "start", "random");
  if (start == "random") {
    reset_to(random_start(scene_, rng_, 0.15, 0.3));
  } else if (start == "goal_offset") {
    Pose p = scene_.goal_pose;
    p.position += scene_.approach_axis * (scene_.entrance_distance + 0.02);
    reset_to(p);
  } else {
    return close_with("bad_message");
  }
  return single(ack("reset", true));
}

TeleopReply TeleopSession::on_record(const nlohmann::json& msg) {
  const std::string action = msg.at("action").get<std::string>();
  nlohmann::json a = ack("record", true);
  a["action"] = action;
  if (action == "start") {
    recorder_.reset();
    recorded_ = 0;
    recording_ = true;
  } else if (action == "stop") {
    recording_ = false;
  } else if (action == "discard") {
    recorder_.reset();
    recorded_ = 0;
    recording_ = false;
  } else if (action == "save") {
    recording_ = false;
    if (!recorder_ || recorder_->size() == 0) {
      a["ok"] = false;
      a["reason"] = "empty_buffer";
      return single(std::move(a));
    }
    const Demonstration demo = recorder_->finalize(sim_.success());
    recorder_.reset();
    recorded_ = 0;
    try {
      a["path"] = append_to_dataset(out_dir_, demo);
    } catch (const std::exception& e) {
      a["ok"] = false;
      a["reason"] = "io";
      log::warn(std::string("teleop save failed: ") + e.what());
      return single(std::move(a));
    }
    a["records"] = demo.records.size();
    a["success"] = demo.meta.success;
  } else {
    return close_with("bad_message");
  }
  return single(std::move(a));
}

void TeleopSession::step() {
  if (steps_ % per_record_ == 0) {
    applied_ = pending_;
    if (recording_) {
      if (!recorder_) recorder_.emplace(scene_.name, cfg_.record_hz, sim_.state().pose, "human");
      recorder_->append(static_cast<double>(recorded_) / cfg_.record_hz,
                        skill_input_from_state(scene_.goal_pose, sim_.state(), applied_));
      ++recorded_;
    }
  }
  sim_.step(applied_);
  ++steps_;
}

void TeleopSession::advance(long steps) {
  for (long i = 0; i < steps; ++i) step();
}

nlohmann::json TeleopSession::state_frame() const {
  nlohmann::json f = frame("state");
  f["t"] = time();
  f["object_pose"] = json_util::to_json(sim_.state().pose);
  f["goal_pose"] = json_util::to_json(scene_.goal_pose);
  f["recording"] = recording_;
  f["outcome"] = sim_.success() ? nlohmann::json("success") : nlohmann::json(nullptr);
  if (cfg_.debug_contacts && !recording_) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& c : sim_.last().contacts) pts.push_back(json_util::to_json(c.point));
    f["contacts"] = pts;
  }
  return f;
}

// Networking.

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct TeleopServer::Impl {
  struct Connection : std::enable_shared_from_this<Connection> {
    Impl* server;
    tcp::socket socket;
    std::optional<websocket::stream<tcp::socket>> ws;
    beast::flat_buffer buffer;
    http::request<http::string_body> request;
    std::shared_ptr<http::response<http::string_body>> rejection;
    std::deque<std::string> replies;
    std::optional<std::string> latest_state;
    std::string in_flight;
    std::string close_reason;
    bool writing = false;
    bool closing = false;
    bool open = false;
    int client = 0;

    Connection(Impl* s, tcp::socket sock) : server(s), socket(std::move(sock)) {}

    void start() {
      auto self = shared_from_this();
      http::async_read(socket, buffer, request, [self](beast::error_code ec, std::size_t) {
        if (ec) return;
        self->on_request();
      });
    }

    void on_request() {
      if (request.target() != "/teleop" || !websocket::is_upgrade(request)) {
        rejection = std::make_shared<http::response<http::string_body>>(http::status::not_found, request.version());
        rejection->set(http::field::content_type, "text/plain");
        rejection->body() = "websocket endpoint is /teleop\n";
        rejection->prepare_payload();
        auto self = shared_from_this();
        http::async_write(socket, *rejection, [self](beast::error_code, std::size_t) {
          beast::error_code ignored;
          self->socket.shutdown(tcp::socket::shutdown_both, ignored);
        });
        return;
      }
      ws.emplace(std::move(socket));
      ws->text(true);
      auto self = shared_from_this();
      ws->async_accept(request, [self](beast::error_code ec) {
        if (ec) return;
        self->open = true;
        self->client = self->server->session.connect();
        self->server->connections[self->client] = self;
        log::info("teleop client " + std::to_string(self->client) + " connected");
        self->read();
      });
    }

    void read() {
      buffer.clear();
      auto self = shared_from_this();
      ws->async_read(buffer, [self](beast::error_code ec, std::size_t) {
        if (ec) {
          self->drop();
          return;
        }
        if (self->closing) return;
        TeleopReply reply = self->server->session.handle(self->client, beast::buffers_to_string(self->buffer.data()));
        for (auto& f : reply.frames) self->replies.push_back(f.dump());
        if (!reply.close_reason.empty()) {
          self->closing = true;
          self->close_reason = reply.close_reason;
        }
        self->flush();
        if (!self->closing) self->read();
      });
    }

    void push_state(const std::string& text) {
      if (!open || closing) return;
      latest_state = text;
      flush();
    }

    void flush() {
      if (writing || !open) return;
      if (!replies.empty()) {
        in_flight = std::move(replies.front());
        replies.pop_front();
      } else if (latest_state && !closing) {
        in_flight = std::move(*latest_state);
        latest_state.reset();
      } else {
        if (closing) close();
        return;
      }
      writing = true;
      auto self = shared_from_this();
      ws->async_write(net::buffer(in_flight), [self](beast::error_code ec, std::size_t) {
        self->writing = false;
        if (ec) {
          self->drop();
          return;
        }
        self->flush();
      });
    }

    void close() {
      if (!open) return;
      open = false;
      websocket::close_reason reason(websocket::close_code::policy_error);
      reason.reason = close_reason.empty() ? "server_shutdown" : close_reason;
      auto self = shared_from_this();
      ws->async_close(reason, [self](beast::error_code) { self->drop(); });
    }

    void drop() {
      open = false;
      if (client != 0) {
        server->session.disconnect(client);
        server->connections.erase(client);
        log::info("teleop client " + std::to_string(client) + " left");
        client = 0;
      }
    }
  };

  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  net::steady_timer sim_timer{ioc};
  net::steady_timer broadcast_timer{ioc};
  TeleopSession session;
  TeleopConfig cfg;
  std::map<int, std::shared_ptr<Connection>> connections;
  std::chrono::steady_clock::time_point origin;
  long stepped = 0;
  bool bound = false;

  Impl(SceneConfig scene, TeleopConfig c, std::string out_dir, std::uint64_t seed)
      : session(std::move(scene), c, std::move(out_dir), seed), cfg(std::move(c)) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(this, std::move(socket))->start();
      accept();
    });
  }

  void tick_sim() {
    const double dt = session.sim().scene().sim_dt;
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - origin).count();
    const long due = static_cast<long>(elapsed / dt);
    // Never try to catch up more than 0.2 s of simulated time in one tick.
    const long cap = static_cast<long>(0.2 / dt);
    if (due - stepped > cap) stepped = due - cap;
    session.advance(due - stepped);
    stepped = due;
    sim_timer.expires_after(std::chrono::milliseconds(2));
    sim_timer.async_wait([this](beast::error_code ec) {
      if (!ec) tick_sim();
    });
  }

  void tick_broadcast() {
    const std::string text = session.state_frame().dump();
    for (auto& [id, c] : connections) c->push_state(text);
    broadcast_timer.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / cfg.broadcast_hz)));
    broadcast_timer.async_wait([this](beast::error_code ec) {
      if (!ec) tick_broadcast();
    });
  }

  void shutdown() {
    beast::error_code ignored;
    acceptor.close(ignored);
    sim_timer.cancel();
    broadcast_timer.cancel();
    auto conns = connections;
    for (auto& [id, c] : conns) {
      c->closing = true;
      c->flush();
    }
  }
};

TeleopServer::TeleopServer(SceneConfig scene, TeleopConfig cfg, std::string out_dir, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(std::move(scene), std::move(cfg), std::move(out_dir), seed)) {}

TeleopServer::~TeleopServer() = default;

unsigned short TeleopServer::bind() {
  Impl& s = *impl_;
  beast::error_code ec;
  const auto address = net::ip::make_address(s.cfg.bind, ec);
  if (ec) throw Error("bind_failed", "bad bind address '" + s.cfg.bind + "'");
  const tcp::endpoint endpoint(address, static_cast<unsigned short>(s.cfg.port));
  s.acceptor.open(endpoint.protocol(), ec);
  if (!ec) s.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor.bind(endpoint, ec);
  if (!ec) s.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw Error("bind_failed", s.cfg.bind + ":" + std::to_string(s.cfg.port) + ": " + ec.message());
  s.bound = true;
  return s.acceptor.local_endpoint().port();
}

void TeleopServer::run() {
  Impl& s = *impl_;
  if (!s.bound) bind();
  s.origin = std::chrono::steady_clock::now();
  s.accept();
  s.tick_sim();
  s.tick_broadcast();
  s.ioc.run();
}

void TeleopServer::stop() {
  Impl& s = *impl_;
  net::post(s.ioc, [&s] {
    s.shutdown();
    // Give pending close handshakes a moment, then end the loop.
    auto timer = std::make_shared<net::steady_timer>(s.ioc, std::chrono::milliseconds(200));
    timer->async_wait([&s, timer](beast::error_code) { s.ioc.stop(); });
  });
}

}  // namespace csf
