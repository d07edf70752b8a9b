#pragma once

// HTTP API over a set of independent training sessions.
//
//   POST /session                      create; body {config?, seed?, step_interval_ms?}
//   GET  /session/{id}/status
//   POST /session/{id}/control         {"action": "start"|"pause"|"step"|"reset"}
//   POST /session/{id}/mode            {"mode": "Auto"|"Manual"}
//   POST /session/{id}/epsilon         {"epsilon": x}
//   POST /session/{id}/advice          {"action": "Up"|...}
//   POST /session/{id}/reward          {"reward": r} or {"confirm": true}
//   GET  /session/{id}/qtable?slice=0|1
//   GET  /session/{id}/visits?slice=0|1
//   GET  /session/{id}/trajectory
//   GET  /session/{id}/events          text/event-stream
//   POST /session/{id}/save            {"path": "..."}
//   POST /session/load                 {"path": "..."}
//
// 400 malformed request, 404 unknown session, 409 rejected by the loop.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include "httplib.h"

#include "qhunt/bridge_server.hpp"
#include "qhunt/json_io.hpp"
#include "qhunt/session.hpp"

namespace qhunt {

inline constexpr int kServerConfigSchemaVersion = 1;

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::string> bridge_url;
    std::chrono::milliseconds step_interval{300};
    std::chrono::milliseconds bridge_timeout{2000};
};

namespace detail {

inline std::pair<std::string, int> split_bind(const std::string& bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw ConfigError({"bind address must be host:port, got '" + bind + "'"});
    try {
        std::size_t used = 0;
        const int port = std::stoi(bind.substr(colon + 1), &used);
        if (used != bind.size() - colon - 1 || port < 0 || port > 65535) throw std::out_of_range("port");
        return {bind.substr(0, colon), port};
    } catch (const std::logic_error&) {
        throw ConfigError({"bad port in bind address '" + bind + "'"});
    }
}

inline std::chrono::milliseconds parse_millis(const std::string& text, std::string_view what) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size() || v < 0) throw std::out_of_range("ms");
        return std::chrono::milliseconds(v);
    } catch (const std::logic_error&) {
        throw ConfigError({std::string(what) + ": expected a non-negative integer, got '" + text + "'"});
    }
}

} // namespace detail

inline json to_json(const ServerConfig& c) {
    return {{"schema_version", kServerConfigSchemaVersion},
            {"bind", c.host + ":" + std::to_string(c.port)},
            {"bridge_url", c.bridge_url ? json(*c.bridge_url) : json(nullptr)},
            {"step_interval_ms", c.step_interval.count()},
            {"bridge_timeout_ms", c.bridge_timeout.count()}};
}

inline ServerConfig server_config_from_json(const json& j) {
    constexpr std::string_view ctx = "server config";
    jsonio::expect_keys(j, {"schema_version", "bind", "bridge_url", "step_interval_ms", "bridge_timeout_ms"}, ctx);
    jsonio::check_version(j, kServerConfigSchemaVersion, ctx);
    ServerConfig c;
    if (j.contains("bind")) std::tie(c.host, c.port) = detail::split_bind(jsonio::get<std::string>(j, "bind", ctx));
    if (j.contains("bridge_url") && !j["bridge_url"].is_null())
        c.bridge_url = jsonio::get<std::string>(j, "bridge_url", ctx);
    if (j.contains("step_interval_ms"))
        c.step_interval = std::chrono::milliseconds(jsonio::get<std::uint32_t>(j, "step_interval_ms", ctx));
    if (j.contains("bridge_timeout_ms"))
        c.bridge_timeout = std::chrono::milliseconds(jsonio::get<std::uint32_t>(j, "bridge_timeout_ms", ctx));
    return c;
}

/// Apply QHUNT_BIND, QHUNT_BRIDGE_URL and QHUNT_STEP_INTERVAL_MS on top of `c`.
inline ServerConfig apply_env_overrides(ServerConfig c) {
    if (const char* bind = std::getenv("QHUNT_BIND"); bind && *bind) std::tie(c.host, c.port) = detail::split_bind(bind);
    if (const char* url = std::getenv("QHUNT_BRIDGE_URL"); url) {
        if (*url) c.bridge_url = url;
        else c.bridge_url.reset();
    }
    if (const char* ms = std::getenv("QHUNT_STEP_INTERVAL_MS"); ms && *ms)
        c.step_interval = detail::parse_millis(ms, "QHUNT_STEP_INTERVAL_MS");
    return c;
}

inline ServerConfig load_server_config(const std::filesystem::path& path) {
    return server_config_from_json(jsonio::parse(jsonio::read_file(path), path.string()));
}

inline std::string format_sse(const TrainingEvent& e) {
    return "id: " + std::to_string(e.seq) + "\nevent: " + std::string(to_string(e.kind)) +
           "\ndata: " + to_json(e).dump() + "\n\n";
}

class SessionServer {
public:
    struct Options {
        /// Idle time between keepalive comments on an event stream.
        std::chrono::milliseconds keepalive{15000};
    };

    explicit SessionServer(ServerConfig cfg) : SessionServer(std::move(cfg), Options{}) {}
    SessionServer(ServerConfig cfg, Options opts) : cfg_(std::move(cfg)), opts_(opts) { routes(); }

    ~SessionServer() { stop(); }

    SessionServer(const SessionServer&) = delete;
    SessionServer& operator=(const SessionServer&) = delete;

    /// Bind and serve on a background thread; returns the bound port.
    int start() {
        port_ = cfg_.port == 0 ? http_.bind_to_any_port(cfg_.host)
                               : (http_.bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1);
        if (port_ < 0) throw Error("session server: cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
        thread_ = std::thread([this] { http_.listen_after_bind(); });
        http_.wait_until_ready();
        return port_;
    }

    void stop() {
        stopping_ = true;
        {
            std::unique_lock lock(mu_);
            sessions_.clear();
        }
        http_.stop();
        if (thread_.joinable()) thread_.join();
    }

    int port() const { return port_; }

    /// Create a session in-process; returns its id.
    std::string create(MazeConfig config, Hyperparams hp, std::uint64_t seed,
                       std::optional<std::chrono::milliseconds> step_interval = std::nullopt) {
        SessionOptions opts{step_interval.value_or(cfg_.step_interval)};
        return add(Session::create(std::move(config), hp, seed, opts, make_link()));
    }

    std::shared_ptr<Session> find(const std::string& id) const {
        std::shared_lock lock(mu_);
        auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

private:
    using Req = httplib::Request;
    using Res = httplib::Response;

    std::shared_ptr<bridge::Link> make_link() const {
        if (!cfg_.bridge_url) return nullptr;
        return std::make_shared<bridge::HttpLink>(*cfg_.bridge_url, cfg_.bridge_timeout);
    }

    std::string add(std::unique_ptr<Session> s) {
        std::unique_lock lock(mu_);
        std::string id = "s" + std::to_string(next_id_++);
        sessions_.emplace(id, std::shared_ptr<Session>(std::move(s)));
        return id;
    }

    static void reply(Res& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void fail(Res& res, int status, const std::string& message) { reply(res, status, {{"error", message}}); }

    static json body_of(const Req& req) {
        if (req.body.empty()) return json::object();
        json j = jsonio::parse(req.body, "request body");
        if (!j.is_object()) throw FormatError("request body: expected an object");
        return j;
    }

    static std::optional<bool> slice_param(const Req& req) {
        if (!req.has_param("slice")) return std::nullopt;
        const std::string v = req.get_param_value("slice");
        if (v == "1" || v == "true") return true;
        if (v == "0" || v == "false") return false;
        throw FormatError("slice must be 0 or 1");
    }

    static void answer(Res& res, const Verdict& v, const Session& s) {
        if (v.accepted) reply(res, 200, {{"accepted", true}, {"status", s.status_json()}});
        else reply(res, 409, {{"accepted", false}, {"error", v.reason}, {"status", s.status_json()}});
    }

    // Wrap a per-session handler with id lookup and error mapping.
    template <typename F>
    auto with_session(F f) {
        return [this, f](const Req& req, Res& res) {
            auto s = find(req.matches[1]);
            if (!s) return fail(res, 404, "no session " + std::string(req.matches[1]));
            guarded(res, [&] { f(req, res, s); });
        };
    }

    template <typename F>
    static void guarded(Res& res, F&& f) {
        try {
            f();
        } catch (const ConfigError& e) {
            reply(res, 400, {{"error", e.what()}, {"problems", e.problems()}});
        } catch (const ParseError& e) {
            reply(res, 400, {{"error", e.what()}, {"offset", e.offset()}});
        } catch (const FormatError& e) {
            fail(res, 400, e.what());
        } catch (const SchemaVersionError& e) {
            fail(res, 400, e.what());
        } catch (const Error& e) {
            fail(res, 500, e.what());
        }
    }

    void routes() {
        http_.Post("/session/load", [this](const Req& req, Res& res) {
            guarded(res, [&] {
                const json body = body_of(req);
                jsonio::expect_keys(body, {"path", "step_interval_ms"}, "load");
                SessionOptions opts{cfg_.step_interval};
                if (body.contains("step_interval_ms"))
                    opts.step_interval = std::chrono::milliseconds(jsonio::get<std::uint32_t>(body, "step_interval_ms", "load"));
                const auto id = add(Session::load(jsonio::get<std::string>(body, "path", "load"), opts, make_link()));
                reply(res, 200, {{"id", id}, {"status", find(id)->status_json()}});
            });
        });

        http_.Post("/session", [this](const Req& req, Res& res) {
            guarded(res, [&] {
                const json body = body_of(req);
                jsonio::expect_keys(body, {"config", "seed", "step_interval_ms"}, "session");
                TrainingConfig tc;
                if (body.contains("config")) tc = training_config_from_json(body["config"]);
                require_valid(tc.maze);
                const auto seed = body.contains("seed") ? jsonio::get<std::uint64_t>(body, "seed", "session") : 0;
                std::optional<std::chrono::milliseconds> interval;
                if (body.contains("step_interval_ms"))
                    interval = std::chrono::milliseconds(jsonio::get<std::uint32_t>(body, "step_interval_ms", "session"));
                const auto id = create(tc.maze, tc.hyperparams, seed, interval);
                reply(res, 200, {{"id", id}, {"status", find(id)->status_json()}});
            });
        });

        http_.Get(R"(/session/([^/]+)/status)", with_session([](const Req&, Res& res, auto s) {
                      reply(res, 200, s->status_json());
                  }));

        http_.Post(R"(/session/([^/]+)/control)", with_session([](const Req& req, Res& res, auto s) {
                       const json body = body_of(req);
                       jsonio::expect_keys(body, {"action"}, "control");
                       const auto c = control_from_string(jsonio::get<std::string>(body, "action", "control"));
                       if (!c) throw FormatError("control: action must be start, pause, step or reset");
                       answer(res, s->control(*c), *s);
                   }));

        http_.Post(R"(/session/([^/]+)/mode)", with_session([](const Req& req, Res& res, auto s) {
                       const json body = body_of(req);
                       jsonio::expect_keys(body, {"mode"}, "mode");
                       const auto m = training_mode_from_string(jsonio::get<std::string>(body, "mode", "mode"));
                       if (!m) throw FormatError("mode: expected Auto or Manual");
                       answer(res, s->set_mode(*m), *s);
                   }));

        http_.Post(R"(/session/([^/]+)/epsilon)", with_session([](const Req& req, Res& res, auto s) {
                       const json body = body_of(req);
                       jsonio::expect_keys(body, {"epsilon"}, "epsilon");
                       answer(res, s->set_epsilon(jsonio::get<double>(body, "epsilon", "epsilon")), *s);
                   }));

        http_.Post(R"(/session/([^/]+)/advice)", with_session([](const Req& req, Res& res, auto s) {
                       const json body = body_of(req);
                       jsonio::expect_keys(body, {"action"}, "advice");
                       answer(res, s->submit_advice(action_from_json(jsonio::field(body, "action", "advice"), "advice")),
                              *s);
                   }));

        http_.Post(R"(/session/([^/]+)/reward)", with_session([](const Req& req, Res& res, auto s) {
                       const json body = body_of(req);
                       jsonio::expect_keys(body, {"reward", "confirm"}, "reward");
                       if (body.contains("reward") == body.contains("confirm"))
                           throw FormatError("reward: give exactly one of reward or confirm");
                       if (body.contains("confirm")) {
                           if (!jsonio::get<bool>(body, "confirm", "reward"))
                               throw FormatError("reward: confirm must be true");
                           answer(res, s->confirm_reward(), *s);
                       } else {
                           answer(res, s->submit_reward(jsonio::get<double>(body, "reward", "reward")), *s);
                       }
                   }));

        http_.Get(R"(/session/([^/]+)/qtable)", with_session([](const Req& req, Res& res, auto s) {
                      reply(res, 200, s->qtable_payload(slice_param(req)));
                  }));

        http_.Get(R"(/session/([^/]+)/visits)", with_session([](const Req& req, Res& res, auto s) {
                      reply(res, 200, s->visits_payload(slice_param(req)));
                  }));

        http_.Get(R"(/session/([^/]+)/trajectory)", with_session([](const Req&, Res& res, auto s) {
                      reply(res, 200, s->trajectory_payload());
                  }));

        http_.Post(R"(/session/([^/]+)/save)", with_session([](const Req& req, Res& res, auto s) {
                       const json body = body_of(req);
                       jsonio::expect_keys(body, {"path"}, "save");
                       const auto path = jsonio::get<std::string>(body, "path", "save");
                       s->save(path);
                       reply(res, 200, {{"path", path}});
                   }));

        http_.Get(R"(/session/([^/]+)/events)", with_session([this](const Req&, Res& res, auto s) {
                      auto sub = s->subscribe();
                      res.set_header("Cache-Control", "no-cache");
                      res.set_chunked_content_provider(
                          "text/event-stream",
                          [this, sub](std::size_t, httplib::DataSink& sink) { return pump(*sub, sink); },
                          [sub](bool) { sub->close(); });
                  }));
    }

    // One round of the event-stream writer. Returning false ends the response.
    bool pump(Subscription& sub, httplib::DataSink& sink) {
        if (stopping_ || !sink.is_writable()) return false;
        const auto item = sub.pop(opts_.keepalive);
        std::string chunk;
        switch (item.state) {
        case Subscription::State::Open:
            chunk = item.event ? format_sse(*item.event) : std::string(": keepalive\n\n");
            return sink.write(chunk.data(), chunk.size());
        case Subscription::State::Dropped:
            chunk = "event: dropped\ndata: {\"reason\":\"subscriber buffer overflow\"}\n\n";
            sink.write(chunk.data(), chunk.size());
            sink.done();
            return true;
        case Subscription::State::Closed:
            sink.done();
            return true;
        }
        return false;
    }

    ServerConfig cfg_;
    Options opts_;
    mutable std::shared_mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 1;
    httplib::Server http_;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
    int port_ = -1;
};

} // namespace qhunt
