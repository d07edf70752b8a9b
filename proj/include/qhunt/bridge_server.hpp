#pragma once

// HTTP face of the robot relay, plus the matching client link.
//
//   POST /command   body: one framed command line (text/plain)
//                   200 -> {"status","pose":{row,col,heading_deg},"message"}
//                   400 -> malformed frame, 409 -> a MOVE is already executing
//   GET  /telemetry latest completed pose {row,col,heading_deg}

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "qhunt/bridge_protocol.hpp"
#include "qhunt/robot_sim.hpp"

namespace qhunt::bridge {

class BridgeServer {
public:
    struct Options {
        /// How long a MOVE occupies the device. Zero for tests and headless runs.
        std::chrono::milliseconds move_duration{0};
    };

    explicit BridgeServer(RobotSimulator sim) : BridgeServer(std::move(sim), Options{}) {}
    BridgeServer(RobotSimulator sim, Options opts) : sim_(std::move(sim)), opts_(opts) {
        latest_ = sim_.pose();
        routes();
    }

    ~BridgeServer() { stop(); }

    BridgeServer(const BridgeServer&) = delete;
    BridgeServer& operator=(const BridgeServer&) = delete;

    /// Bind and serve on a background thread. Port 0 picks a free port.
    int start(const std::string& host, int port) {
        port_ = port == 0 ? http_.bind_to_any_port(host) : (http_.bind_to_port(host, port) ? port : -1);
        if (port_ < 0) throw Error("bridge: cannot bind " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { http_.listen_after_bind(); });
        http_.wait_until_ready();
        return port_;
    }

    /// Serve on the calling thread until stop().
    void run(const std::string& host, int port) {
        if (!http_.listen(host, port)) throw Error("bridge: cannot listen on " + host + ":" + std::to_string(port));
    }

    void stop() {
        http_.stop();
        if (thread_.joinable()) thread_.join();
    }

    int port() const { return port_; }

    Pose telemetry() const {
        std::lock_guard lock(latest_mu_);
        return latest_;
    }

private:
    void routes() {
        http_.Post("/command", [this](const httplib::Request& req, httplib::Response& res) {
            Command cmd;
            try {
                cmd = decode(req.body);
            } catch (const DecodeError& e) {
                res.status = 400;
                res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
                return;
            }

            const bool is_move = std::holds_alternative<Move>(cmd);
            std::unique_lock lock(device_mu_, std::defer_lock);
            if (is_move) {
                if (!lock.try_lock()) {
                    res.status = 409;
                    res.set_content(nlohmann::json{{"error", "busy: a move is executing"}}.dump(),
                                    "application/json");
                    return;
                }
            } else {
                lock.lock();
            }

            const Reply reply = sim_.execute(cmd);
            if (is_move && opts_.move_duration.count() > 0) std::this_thread::sleep_for(opts_.move_duration);
            {
                std::lock_guard pose_lock(latest_mu_);
                latest_ = sim_.pose();
            }
            res.set_content(to_json(reply).dump(), "application/json");
        });

        http_.Get("/telemetry", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(to_json(telemetry()).dump(), "application/json");
        });
    }

    RobotSimulator sim_;
    Options opts_;
    std::mutex device_mu_;
    // Guards only the published pose, so telemetry never waits on a move in progress.
    mutable std::mutex latest_mu_;
    Pose latest_;
    httplib::Server http_;
    std::thread thread_;
    int port_ = -1;
};

/// Link that talks to a bridge over HTTP. Any transport failure, timeout or
/// non-200 status is reported as an unreachable robot.
class HttpLink : public Link {
public:
    explicit HttpLink(const std::string& base_url,
                      std::chrono::milliseconds timeout = std::chrono::milliseconds(2000))
        : client_(base_url) {
        const auto secs = static_cast<time_t>(timeout.count() / 1000);
        const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
        client_.set_connection_timeout(secs, usecs);
        client_.set_read_timeout(secs, usecs);
        client_.set_write_timeout(secs, usecs);
    }

    std::optional<Reply> send(const Command& cmd) override {
        std::lock_guard lock(mu_);
        auto res = client_.Post("/command", encode(cmd), "text/plain");
        if (!res) {
            last_error_ = httplib::to_string(res.error());
            return std::nullopt;
        }
        if (res->status != 200) {
            last_error_ = "HTTP " + std::to_string(res->status) + ": " + res->body;
            return std::nullopt;
        }
        try {
            return reply_from_json(nlohmann::json::parse(res->body));
        } catch (const std::exception& e) {
            last_error_ = e.what();
            return std::nullopt;
        }
    }

    std::optional<Pose> telemetry() {
        std::lock_guard lock(mu_);
        auto res = client_.Get("/telemetry");
        if (!res || res->status != 200) return std::nullopt;
        return pose_from_json(nlohmann::json::parse(res->body));
    }

    std::string last_error() const {
        std::lock_guard lock(mu_);
        return last_error_;
    }

private:
    mutable std::mutex mu_;
    httplib::Client client_;
    std::string last_error_;
};

} // namespace qhunt::bridge
