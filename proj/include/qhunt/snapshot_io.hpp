#pragma once

// Session snapshot: the complete persisted state of a training session.
// Serialization is canonical (sorted keys, shortest round-trip doubles), so
// save -> load -> save reproduces the same bytes.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "qhunt/export.hpp"
#include "qhunt/hitl.hpp"
#include "qhunt/json_io.hpp"

namespace qhunt {

inline constexpr int kSessionSchemaVersion = 1;

struct SessionSnapshot {
    LoopState loop;
    std::uint64_t next_event_seq = 1;

    bool operator==(const SessionSnapshot&) const = default;
};

namespace detail {

template <typename T, typename F>
json optional_json(const std::optional<T>& v, F&& f) {
    return v ? json(f(*v)) : json(nullptr);
}

inline json env_to_json(const EnvState& e) {
    return {{"pos", to_json(e.pos)},
            {"treasure_collected", e.treasure_collected},
            {"steps_taken", e.steps_taken},
            {"done", e.done}};
}

inline EnvState env_from_json(const json& j) {
    constexpr std::string_view ctx = "env";
    jsonio::expect_keys(j, {"pos", "treasure_collected", "steps_taken", "done"}, ctx);
    EnvState e;
    e.pos = grid_pos_from_json(jsonio::field(j, "pos", ctx), "env.pos");
    e.treasure_collected = jsonio::get<bool>(j, "treasure_collected", ctx);
    e.steps_taken = jsonio::get<int>(j, "steps_taken", ctx);
    e.done = jsonio::get<bool>(j, "done", ctx);
    return e;
}

inline std::string action_name(Action a) { return std::string(to_string(a)); }

inline std::optional<Action> optional_action(const json& j, std::string_view ctx) {
    if (j.is_null()) return std::nullopt;
    return action_from_json(j, ctx);
}

inline std::optional<double> optional_double(const json& j, std::string_view ctx) {
    if (j.is_null()) return std::nullopt;
    if (!j.is_number()) throw FormatError(std::string(ctx) + ": expected a number or null");
    return j.get<double>();
}

inline json pending_to_json(const PendingStep& p) {
    json outcome = nullptr;
    if (p.outcome)
        outcome = {{"next", env_to_json(p.outcome->next)},
                   {"reward", p.outcome->reward},
                   {"event", std::string(to_string(p.outcome->event))}};
    return {{"s", p.s},
            {"action", optional_json(p.action, action_name)},
            {"action_source", std::string(to_string(p.action_source))},
            {"outcome", outcome},
            {"reward", optional_json(p.reward, [](double v) { return v; })},
            {"reward_source", std::string(to_string(p.reward_source))}};
}

inline PendingStep pending_from_json(const json& j) {
    constexpr std::string_view ctx = "pending";
    jsonio::expect_keys(j, {"s", "action", "action_source", "outcome", "reward", "reward_source"}, ctx);
    PendingStep p;
    p.s = jsonio::get<std::size_t>(j, "s", ctx);
    p.action = optional_action(jsonio::field(j, "action", ctx), "pending.action");
    auto as = action_source_from_string(jsonio::get<std::string>(j, "action_source", ctx));
    auto rs = reward_source_from_string(jsonio::get<std::string>(j, "reward_source", ctx));
    if (!as || !rs) throw FormatError("pending: bad source tag");
    p.action_source = *as;
    p.reward_source = *rs;
    const json& outcome = jsonio::field(j, "outcome", ctx);
    if (!outcome.is_null()) {
        jsonio::expect_keys(outcome, {"next", "reward", "event"}, "pending.outcome");
        StepOutcome o;
        o.next = env_from_json(jsonio::field(outcome, "next", "pending.outcome"));
        o.reward = jsonio::get<double>(outcome, "reward", "pending.outcome");
        auto ev = step_event_from_string(jsonio::get<std::string>(outcome, "event", "pending.outcome"));
        if (!ev) throw FormatError("pending.outcome: bad event");
        o.event = *ev;
        p.outcome = o;
    }
    p.reward = optional_double(jsonio::field(j, "reward", ctx), "pending.reward");
    return p;
}

} // namespace detail

inline json to_json(const LoopStatus& s) {
    return {{"mode", std::string(to_string(s.mode))},
            {"phase", std::string(to_string(s.phase))},
            {"current_state", s.current_state},
            {"last_action", detail::optional_json(s.last_action, detail::action_name)},
            {"last_reward", detail::optional_json(s.last_reward, [](double v) { return v; })},
            {"episode", s.episode},
            {"score", s.score},
            {"awaiting", detail::optional_json(s.awaiting, [](AwaitingKind k) { return std::string(to_string(k)); })}};
}

inline QTableExport make_qtable_export(const LoopState& st) {
    return {config_digest(st.config), st.q, st.counts, st.hp, st.rng.seed()};
}

inline json to_json(const SessionSnapshot& snap) {
    const LoopState& st = snap.loop;
    json records = json::array();
    for (const auto& r : st.current_records) records.push_back(to_json(r));
    json episodes = json::array();
    for (const auto& e : st.episodes) episodes.push_back(to_json(e));

    json loop = {{"mode", std::string(to_string(st.mode))},
                 {"phase", std::string(to_string(st.phase))},
                 {"env", detail::env_to_json(st.env)},
                 {"episode", st.episode},
                 {"score", st.score},
                 {"last_action", detail::optional_json(st.last_action, detail::action_name)},
                 {"last_reward", detail::optional_json(st.last_reward, [](double v) { return v; })},
                 {"pending", detail::pending_to_json(st.pending)},
                 {"advice_slot", detail::optional_json(st.advice_slot, detail::action_name)},
                 {"reward_slot", detail::optional_json(st.reward_slot, [](double v) { return v; })},
                 {"current_records", records}};

    return {{"schema_version", kSessionSchemaVersion},
            {"kind", "session"},
            {"config", to_json(st.config)},
            {"qtable", to_json(make_qtable_export(st))},
            {"rng", {{"seed", st.rng.seed()}, {"draws", st.rng.draws()}}},
            {"status", to_json(loop_status(st))},
            {"loop", loop},
            {"episodes", episodes},
            {"next_event_seq", snap.next_event_seq}};
}

inline SessionSnapshot session_snapshot_from_json(const json& j) {
    constexpr std::string_view ctx = "session";
    jsonio::expect_keys(j, {"schema_version", "kind", "config", "qtable", "rng", "status", "loop", "episodes",
                            "next_event_seq"},
                        ctx);
    jsonio::check_version(j, kSessionSchemaVersion, ctx);
    if (jsonio::get<std::string>(j, "kind", ctx) != "session") throw FormatError("session: wrong kind");

    SessionSnapshot snap;
    LoopState& st = snap.loop;
    st.config = maze_config_from_json(jsonio::field(j, "config", ctx));
    require_valid(st.config);

    const QTableExport qx = qtable_export_from_json(jsonio::field(j, "qtable", ctx));
    if (qx.config_digest != config_digest(st.config))
        throw FormatError("session: qtable config_digest does not match config");
    if (qx.values.num_states() != st.config.num_states())
        throw FormatError("session: qtable dimensions do not match config");
    st.q = qx.values;
    st.counts = qx.visits;
    st.hp = qx.hyperparams;

    const json& rng = jsonio::field(j, "rng", ctx);
    jsonio::expect_keys(rng, {"seed", "draws"}, "rng");
    const auto seed = jsonio::get<std::uint64_t>(rng, "seed", "rng");
    if (seed != qx.seed) throw FormatError("session: rng seed does not match qtable seed");
    st.rng = Rng::restore(seed, jsonio::get<std::uint64_t>(rng, "draws", "rng"));

    const json& loop = jsonio::field(j, "loop", ctx);
    constexpr std::string_view lctx = "loop";
    jsonio::expect_keys(loop, {"mode", "phase", "env", "episode", "score", "last_action", "last_reward", "pending",
                               "advice_slot", "reward_slot", "current_records"},
                        lctx);
    auto mode = training_mode_from_string(jsonio::get<std::string>(loop, "mode", lctx));
    auto phase = step_phase_from_string(jsonio::get<std::string>(loop, "phase", lctx));
    if (!mode || !phase) throw FormatError("loop: bad mode or phase");
    st.mode = *mode;
    st.phase = *phase;
    st.env = detail::env_from_json(jsonio::field(loop, "env", lctx));
    st.episode = jsonio::get<std::size_t>(loop, "episode", lctx);
    st.score = jsonio::get<double>(loop, "score", lctx);
    st.last_action = detail::optional_action(jsonio::field(loop, "last_action", lctx), "loop.last_action");
    st.last_reward = detail::optional_double(jsonio::field(loop, "last_reward", lctx), "loop.last_reward");
    st.pending = detail::pending_from_json(jsonio::field(loop, "pending", lctx));
    st.advice_slot = detail::optional_action(jsonio::field(loop, "advice_slot", lctx), "loop.advice_slot");
    st.reward_slot = detail::optional_double(jsonio::field(loop, "reward_slot", lctx), "loop.reward_slot");
    const json& records = jsonio::field(loop, "current_records", lctx);
    if (!records.is_array()) throw FormatError("loop.current_records: expected an array");
    for (const auto& r : records) st.current_records.push_back(step_record_from_json(r));

    const json& episodes = jsonio::field(j, "episodes", ctx);
    if (!episodes.is_array()) throw FormatError("session.episodes: expected an array");
    for (const auto& e : episodes) st.episodes.push_back(episode_log_from_json(e));

    snap.next_event_seq = jsonio::get<std::uint64_t>(j, "next_event_seq", ctx);

    if (to_json(loop_status(st)) != jsonio::field(j, "status", ctx))
        throw FormatError("session: status block disagrees with loop state");
    return snap;
}

inline std::string serialize(const SessionSnapshot& snap) { return to_json(snap).dump() + "\n"; }

inline void save_session_snapshot(const std::filesystem::path& path, const SessionSnapshot& snap) {
    jsonio::write_file(path, serialize(snap));
}

inline SessionSnapshot load_session_snapshot(const std::filesystem::path& path) {
    return session_snapshot_from_json(jsonio::parse(jsonio::read_file(path), path.string()));
}

} // namespace qhunt
