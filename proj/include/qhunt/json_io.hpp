#pragma once

// JSON encodings shared by config files, exports and session snapshots.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "qhunt/error.hpp"
#include "qhunt/grid.hpp"
#include "qhunt/qlearn.hpp"

namespace qhunt {

using json = nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

namespace jsonio {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("write failed for " + path.string());
}

inline json parse(std::string_view text, const std::string& what = "document") {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": " + e.what(), e.byte);
    }
}

/// Reject keys outside `allowed`.
inline void expect_keys(const json& j, std::initializer_list<std::string_view> allowed,
                        std::string_view context) {
    if (!j.is_object()) throw FormatError(std::string(context) + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (auto k : allowed) known = known || k == key;
        if (!known) throw FormatError(std::string(context) + ": unknown field '" + key + "'");
    }
}

inline const json& field(const json& j, std::string_view key, std::string_view context) {
    auto it = j.find(key);
    if (it == j.end())
        throw FormatError(std::string(context) + ": missing field '" + std::string(key) + "'");
    return *it;
}

template <typename T>
T get(const json& j, std::string_view key, std::string_view context) {
    const json& v = field(j, key, context);
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string(context) + "." + std::string(key) + ": " + e.what());
    }
}

inline int schema_version(const json& j, std::string_view context) {
    return get<int>(j, "schema_version", context);
}

inline void check_version(const json& j, int expected, std::string_view context) {
    const int found = schema_version(j, context);
    if (found != expected) throw SchemaVersionError(found, expected);
}

} // namespace jsonio

// ---- primitives -----------------------------------------------------------

inline json to_json(GridPos p) { return json::array({p.row, p.col}); }

inline GridPos grid_pos_from_json(const json& j, std::string_view context) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw FormatError(std::string(context) + ": expected [row, col]");
    return {j[0].get<int>(), j[1].get<int>()};
}

inline Action action_from_json(const json& j, std::string_view context) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (auto a = action_from_name(s)) return *a;
        if (auto a = action_from_letter(s)) return *a;
    }
    throw FormatError(std::string(context) + ": expected an action (Up, Down, Left, Right)");
}

inline json to_json(const RewardSpec& r) {
    return {{"treasure", r.treasure}, {"exit", r.exit}, {"wall", r.wall}, {"step", r.step}};
}

inline json to_json(const Hyperparams& hp) {
    return {{"alpha", hp.alpha()}, {"gamma", hp.gamma()}, {"epsilon", hp.epsilon()}};
}

inline Hyperparams hyperparams_from_json(const json& j) {
    constexpr std::string_view ctx = "hyperparams";
    jsonio::expect_keys(j, {"alpha", "gamma", "epsilon"}, ctx);
    Hyperparams hp;
    try {
        if (j.contains("alpha")) hp.set_alpha(jsonio::get<double>(j, "alpha", ctx));
        if (j.contains("gamma")) hp.set_gamma(jsonio::get<double>(j, "gamma", ctx));
        if (j.contains("epsilon")) hp.set_epsilon(jsonio::get<double>(j, "epsilon", ctx));
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(std::string(ctx) + ": " + e.what());
    }
    return hp;
}

// ---- maze config ----------------------------------------------------------

/// A config file: the maze plus the hyperparameter defaults to train it with.
struct TrainingConfig {
    MazeConfig maze = default_config();
    Hyperparams hyperparams;
};

inline json to_json(const MazeConfig& c) {
    json walls = json::array();
    for (const auto& w : c.walls) walls.push_back(json::array({to_json(w.a()), to_json(w.b())}));
    return {{"schema_version", kConfigSchemaVersion},
            {"width", c.width},
            {"height", c.height},
            {"start", to_json(c.start)},
            {"treasure", to_json(c.treasure)},
            {"exit", to_json(c.exit)},
            {"walls", walls},
            {"rewards", to_json(c.rewards)},
            {"max_steps_per_episode", c.max_steps_per_episode}};
}

inline json to_json(const TrainingConfig& c) {
    json j = to_json(c.maze);
    j["hyperparams"] = to_json(c.hyperparams);
    return j;
}

/// Parse without validating invariants. Missing fields take the default layout's values.
inline TrainingConfig training_config_from_json(const json& j) {
    constexpr std::string_view ctx = "maze config";
    jsonio::expect_keys(j, {"schema_version", "width", "height", "start", "treasure", "exit",
                            "walls", "rewards", "max_steps_per_episode", "hyperparams"},
                        ctx);
    jsonio::check_version(j, kConfigSchemaVersion, ctx);

    TrainingConfig out;
    MazeConfig& c = out.maze;
    if (j.contains("width")) c.width = jsonio::get<int>(j, "width", ctx);
    if (j.contains("height")) c.height = jsonio::get<int>(j, "height", ctx);
    if (j.contains("start")) c.start = grid_pos_from_json(j["start"], "start");
    if (j.contains("treasure")) c.treasure = grid_pos_from_json(j["treasure"], "treasure");
    if (j.contains("exit")) c.exit = grid_pos_from_json(j["exit"], "exit");
    if (j.contains("max_steps_per_episode"))
        c.max_steps_per_episode = jsonio::get<int>(j, "max_steps_per_episode", ctx);
    if (j.contains("walls")) {
        const json& walls = j["walls"];
        if (!walls.is_array()) throw FormatError("walls: expected an array");
        c.walls.clear();
        for (const auto& w : walls) {
            if (!w.is_array() || w.size() != 2) throw FormatError("walls: expected [[r,c],[r,c]]");
            c.walls.emplace_back(grid_pos_from_json(w[0], "wall"), grid_pos_from_json(w[1], "wall"));
        }
    }
    if (j.contains("rewards")) {
        const json& r = j["rewards"];
        jsonio::expect_keys(r, {"treasure", "exit", "wall", "step"}, "rewards");
        if (r.contains("treasure")) c.rewards.treasure = jsonio::get<double>(r, "treasure", "rewards");
        if (r.contains("exit")) c.rewards.exit = jsonio::get<double>(r, "exit", "rewards");
        if (r.contains("wall")) c.rewards.wall = jsonio::get<double>(r, "wall", "rewards");
        if (r.contains("step")) c.rewards.step = jsonio::get<double>(r, "step", "rewards");
    }
    if (j.contains("hyperparams")) out.hyperparams = hyperparams_from_json(j["hyperparams"]);
    return out;
}

inline MazeConfig maze_config_from_json(const json& j) {
    return training_config_from_json(j).maze;
}

/// Load and validate a config file.
inline TrainingConfig load_training_config(const std::filesystem::path& path) {
    TrainingConfig c = training_config_from_json(jsonio::parse(jsonio::read_file(path), path.string()));
    require_valid(c.maze);
    return c;
}

inline void save_training_config(const std::filesystem::path& path, const TrainingConfig& c) {
    jsonio::write_file(path, to_json(c).dump(2) + "\n");
}

/// FNV-1a 64 over the canonical JSON encoding of the maze, as 16 hex digits.
inline std::string config_digest(const MazeConfig& c) {
    const std::string text = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

// ---- step records ---------------------------------------------------------

/// Compact positional encoding:
/// [s, action, r, s_next, done, reward_source, action_source, event]
inline json to_json(const StepRecord& r) {
    return json::array({r.s, std::string(to_string(r.a)), r.r, r.s_next, r.done,
                        std::string(to_string(r.reward_source)),
                        std::string(to_string(r.action_source)), std::string(to_string(r.event))});
}

inline StepRecord step_record_from_json(const json& j) {
    if (!j.is_array() || j.size() != 8) throw FormatError("step record: expected an 8-element array");
    try {
        StepRecord r;
        r.s = j[0].get<std::size_t>();
        r.a = action_from_json(j[1], "step record");
        r.r = j[2].get<double>();
        r.s_next = j[3].get<std::size_t>();
        r.done = j[4].get<bool>();
        auto rs = reward_source_from_string(j[5].get<std::string>());
        auto as = action_source_from_string(j[6].get<std::string>());
        auto ev = step_event_from_string(j[7].get<std::string>());
        if (!rs || !as || !ev) throw FormatError("step record: bad enumeration value");
        r.reward_source = *rs;
        r.action_source = *as;
        r.event = *ev;
        return r;
    } catch (const json::exception& e) {
        throw FormatError(std::string("step record: ") + e.what());
    }
}

inline json to_json(const EpisodeLog& log) {
    json records = json::array();
    for (const auto& r : log.records) records.push_back(to_json(r));
    return {{"episode_index", log.episode_index},
            {"score", log.score},
            {"found_treasure", log.found_treasure},
            {"terminated_by", std::string(to_string(log.terminated_by))},
            {"aborted", log.aborted},
            {"records", records}};
}

inline EpisodeLog episode_log_from_json(const json& j) {
    constexpr std::string_view ctx = "episode";
    jsonio::expect_keys(j, {"episode_index", "score", "found_treasure", "terminated_by", "aborted", "records"},
                        ctx);
    EpisodeLog log;
    log.episode_index = jsonio::get<std::size_t>(j, "episode_index", ctx);
    log.score = jsonio::get<double>(j, "score", ctx);
    log.found_treasure = jsonio::get<bool>(j, "found_treasure", ctx);
    const auto term = jsonio::get<std::string>(j, "terminated_by", ctx);
    if (term != "Exit" && term != "Timeout") throw FormatError("episode: bad terminated_by");
    log.terminated_by = term == "Exit" ? Termination::Exit : Termination::Timeout;
    log.aborted = jsonio::get<bool>(j, "aborted", ctx);
    const json& records = jsonio::field(j, "records", ctx);
    if (!records.is_array()) throw FormatError("episode.records: expected an array");
    for (const auto& r : records) log.records.push_back(step_record_from_json(r));
    return log;
}

} // namespace qhunt
