#pragma once

// A training session: one TrainingLoop, the worker thread that drives it in
// the background, the event fan-out, and the read-side payloads the UI draws.
// Every public method takes the session lock, so controls, human inputs and
// the worker's phase steps are serialized and snapshots never see a step
// half-applied.

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "qhunt/bridge_protocol.hpp"
#include "qhunt/event_bus.hpp"
#include "qhunt/hitl.hpp"
#include "qhunt/json_io.hpp"
#include "qhunt/snapshot_io.hpp"

namespace qhunt {

enum class Control { Start, Pause, Step, Reset };

inline std::optional<Control> control_from_string(std::string_view s) {
    if (s == "start") return Control::Start;
    if (s == "pause") return Control::Pause;
    if (s == "step") return Control::Step;
    if (s == "reset") return Control::Reset;
    return std::nullopt;
}

inline std::string_view to_string(Control c) {
    switch (c) {
    case Control::Start: return "start";
    case Control::Pause: return "pause";
    case Control::Step: return "step";
    case Control::Reset: return "reset";
    }
    return "?";
}

struct SessionOptions {
    /// Wall-clock time per full step while running; 0 runs as fast as possible.
    std::chrono::milliseconds step_interval{300};
};

/// One human or control input, as recorded for deterministic replay.
struct InputRecord {
    std::string kind; ///< control | mode | epsilon | advice | reward | confirm
    json value;

    bool operator==(const InputRecord&) const = default;
};

inline json to_json(const InputRecord& r) { return {{"kind", r.kind}, {"value", r.value}}; }

class Session {
public:
    explicit Session(LoopState state, SessionOptions opts = {}, std::shared_ptr<bridge::Link> link = nullptr,
                     std::uint64_t next_event_seq = 1)
        : loop_(std::move(state)), bus_(next_event_seq), opts_(opts) {
        loop_.set_bridge(std::move(link));
        loop_.set_event_sink([this](EventKind kind, json payload) { bus_.publish(kind, std::move(payload)); });
        worker_ = std::jthread([this](std::stop_token st) { worker_main(st); });
    }

    static std::unique_ptr<Session> create(MazeConfig config, Hyperparams hp, std::uint64_t seed,
                                           SessionOptions opts = {}, std::shared_ptr<bridge::Link> link = nullptr) {
        return std::make_unique<Session>(initial_loop_state(std::move(config), hp, seed), opts, std::move(link));
    }

    static std::unique_ptr<Session> from_snapshot(SessionSnapshot snap, SessionOptions opts = {},
                                                  std::shared_ptr<bridge::Link> link = nullptr) {
        return std::make_unique<Session>(std::move(snap.loop), opts, std::move(link), snap.next_event_seq);
    }

    static std::unique_ptr<Session> load(const std::filesystem::path& path, SessionOptions opts = {},
                                         std::shared_ptr<bridge::Link> link = nullptr) {
        return from_snapshot(load_session_snapshot(path), opts, std::move(link));
    }

    ~Session() {
        worker_.request_stop();
        cv_.notify_all();
        if (worker_.joinable()) worker_.join();
        bus_.close_all();
    }

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    // ---- controls ---------------------------------------------------------

    Verdict control(Control c) {
        std::lock_guard lock(mu_);
        inputs_.push_back({"control", std::string(to_string(c))});
        Verdict v = Verdict::ok();
        switch (c) {
        case Control::Start:
            running_ = true;
            bridge_down_ = false;
            break;
        case Control::Pause:
            running_ = false;
            break;
        case Control::Step:
            if (running_) {
                v = Verdict::reject("pause first");
            } else if (loop_.run_cycle() == AdvanceResult::BridgeDown) {
                bridge_down_ = true;
            } else {
                bridge_down_ = false;
            }
            break;
        case Control::Reset:
            loop_.reset_episode();
            break;
        }
        ++generation_;
        cv_.notify_all();
        return v;
    }

    Verdict set_mode(TrainingMode mode) {
        std::lock_guard lock(mu_);
        inputs_.push_back({"mode", std::string(to_string(mode))});
        loop_.set_mode(mode);
        ++generation_;
        cv_.notify_all();
        return Verdict::ok();
    }

    Verdict set_epsilon(double value) {
        std::lock_guard lock(mu_);
        inputs_.push_back({"epsilon", value});
        return loop_.set_epsilon(value);
    }

    Verdict submit_advice(Action a) {
        std::lock_guard lock(mu_);
        inputs_.push_back({"advice", std::string(to_string(a))});
        return notify(loop_.submit_advice(a));
    }

    Verdict submit_reward(double value) {
        std::lock_guard lock(mu_);
        inputs_.push_back({"reward", value});
        return notify(loop_.submit_reward_override(value));
    }

    Verdict confirm_reward() {
        std::lock_guard lock(mu_);
        inputs_.push_back({"confirm", nullptr});
        return notify(loop_.confirm_reward());
    }

    /// Re-apply a recorded input.
    Verdict apply(const InputRecord& in) {
        if (in.kind == "control") {
            auto c = control_from_string(in.value.get<std::string>());
            if (!c) return Verdict::reject("unknown control");
            return control(*c);
        }
        if (in.kind == "mode") {
            auto m = training_mode_from_string(in.value.get<std::string>());
            if (!m) return Verdict::reject("unknown mode");
            return set_mode(*m);
        }
        if (in.kind == "epsilon") return set_epsilon(in.value.get<double>());
        if (in.kind == "advice") return submit_advice(action_from_json(in.value, "advice"));
        if (in.kind == "reward") return submit_reward(in.value.get<double>());
        if (in.kind == "confirm") return confirm_reward();
        return Verdict::reject("unknown input kind " + in.kind);
    }

    // ---- reads --------------------------------------------------------------

    LoopStatus status() const {
        std::lock_guard lock(mu_);
        return loop_.status();
    }

    bool running() const {
        std::lock_guard lock(mu_);
        return running_;
    }

    bool bridge_down() const {
        std::lock_guard lock(mu_);
        return bridge_down_;
    }

    json status_json() const {
        std::lock_guard lock(mu_);
        json j = to_json(loop_.status());
        j["running"] = running_;
        j["bridge_down"] = bridge_down_;
        j["epsilon"] = loop_.hyperparams().epsilon();
        j["treasure_collected"] = loop_.state().env.treasure_collected;
        const GridPos pos = loop_.state().env.pos;
        j["cell"] = {pos.row, pos.col};
        json legal = json::array();
        for (Action a : loop_.legal_now()) legal.push_back(std::string(to_string(a)));
        j["legal_actions"] = legal;
        return j;
    }

    LoopState state() const {
        std::lock_guard lock(mu_);
        return loop_.state();
    }

    std::vector<InputRecord> input_log() const {
        std::lock_guard lock(mu_);
        return inputs_;
    }

    SessionSnapshot snapshot() const {
        std::lock_guard lock(mu_);
        return {loop_.state(), bus_.next_seq()};
    }

    void save(const std::filesystem::path& path) const { save_session_snapshot(path, snapshot()); }

    std::shared_ptr<Subscription> subscribe(std::size_t capacity = kSubscriberBufferEvents) {
        return bus_.subscribe(capacity);
    }

    /// Q values per cell for one half of the state space, plus the global
    /// min/max over every legal non-terminal entry for colour scaling.
    json qtable_payload(std::optional<bool> treasure_slice = std::nullopt) const {
        std::lock_guard lock(mu_);
        const LoopState& st = loop_.state();
        const bool slice = treasure_slice.value_or(st.env.treasure_collected);

        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t s = 0; s < st.config.num_states(); ++s) {
            const EnvState es = state_from_index(s, st.config);
            if (es.done) continue;
            for (Action a : legal_actions_at(es.pos, st.config)) {
                lo = std::min(lo, st.q(s, a));
                hi = std::max(hi, st.q(s, a));
            }
        }
        json cells = json::array();
        for_each_cell(st.config, slice, [&](GridPos p, std::size_t s, bool terminal, const ActionList& legal) {
            json values = json::object();
            for (Action a : legal) values[std::string(to_string(a))] = st.q(s, a);
            cells.push_back(cell_json(p, s, terminal, legal, values));
        });
        return {{"treasure_slice", slice}, {"width", st.config.width}, {"height", st.config.height},
                {"min", lo},               {"max", hi},                {"cells", cells}};
    }

    json visits_payload(std::optional<bool> treasure_slice = std::nullopt) const {
        std::lock_guard lock(mu_);
        const LoopState& st = loop_.state();
        const bool slice = treasure_slice.value_or(st.env.treasure_collected);
        json cells = json::array();
        for_each_cell(st.config, slice, [&](GridPos p, std::size_t s, bool terminal, const ActionList& legal) {
            json counts = json::object();
            for (Action a : legal) counts[std::string(to_string(a))] = st.counts(s, a);
            cells.push_back(cell_json(p, s, terminal, legal, counts));
        });
        return {{"treasure_slice", slice},
                {"width", st.config.width},
                {"height", st.config.height},
                {"total", table_sum(st.counts)},
                {"cells", cells}};
    }

    /// Steps of the most recent completed (not reset-aborted) episode.
    json trajectory_payload() const {
        std::lock_guard lock(mu_);
        const LoopState& st = loop_.state();
        auto it = std::find_if(st.episodes.rbegin(), st.episodes.rend(),
                               [](const EpisodeLog& e) { return !e.aborted; });
        if (it == st.episodes.rend()) return {{"available", false}, {"steps", json::array()}};
        json steps = json::array();
        for (const auto& r : it->records) {
            const GridPos from = state_from_index(r.s, st.config).pos;
            const GridPos to = state_from_index(r.s_next, st.config).pos;
            steps.push_back({{"cell", {from.row, from.col}},
                             {"next_cell", {to.row, to.col}},
                             {"action", std::string(to_string(r.a))},
                             {"reward", r.r},
                             {"event", std::string(to_string(r.event))}});
        }
        return {{"available", true},
                {"episode", it->episode_index},
                {"score", it->score},
                {"terminated_by", std::string(to_string(it->terminated_by))},
                {"steps", steps}};
    }

private:
    template <typename F>
    static void for_each_cell(const MazeConfig& c, bool slice, F&& f) {
        for (int r = 0; r < c.height; ++r) {
            for (int col = 0; col < c.width; ++col) {
                EnvState es{{r, col}, slice, 0, false};
                const std::size_t s = state_index(es, c);
                const bool terminal = es.pos == c.exit;
                f(es.pos, s, terminal, terminal ? ActionList{} : legal_actions_at(es.pos, c));
            }
        }
    }

    static json cell_json(GridPos p, std::size_t s, bool terminal, const ActionList& legal, json values) {
        json names = json::array();
        for (Action a : legal) names.push_back(std::string(to_string(a)));
        return {{"row", p.row}, {"col", p.col}, {"state", s}, {"terminal", terminal},
                {"legal", names}, {"values", std::move(values)}};
    }

    Verdict notify(Verdict v) {
        if (v.accepted) {
            ++generation_;
            cv_.notify_all();
        }
        return v;
    }

    void worker_main(std::stop_token stop) {
        std::unique_lock lock(mu_);
        while (!stop.stop_requested()) {
            if (!cv_.wait(lock, stop, [&] { return running_; })) break;

            const AdvanceResult r = loop_.advance_phase();
            if (r == AdvanceResult::BridgeDown) {
                running_ = false;
                bridge_down_ = true;
                continue;
            }
            if (r == AdvanceResult::AwaitingInput) {
                const auto seen = generation_;
                cv_.wait(lock, stop, [&] { return !running_ || generation_ != seen; });
                continue;
            }
            const auto pause = opts_.step_interval / static_cast<int>(kNumPhases);
            if (pause.count() > 0) {
                cv_.wait_for(lock, stop, pause, [&] { return !running_; });
            } else {
                lock.unlock();
                std::this_thread::yield();
                lock.lock();
            }
        }
    }

    mutable std::mutex mu_;
    std::condition_variable_any cv_;
    TrainingLoop loop_;
    EventBus bus_;
    SessionOptions opts_;
    bool running_ = false;
    bool bridge_down_ = false;
    std::uint64_t generation_ = 0;
    std::vector<InputRecord> inputs_;
    std::jthread worker_;
};

} // namespace qhunt
