#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qhunt/json_io.hpp"
#include "qhunt/qlearn.hpp"

namespace qhunt {

inline constexpr int kQTableSchemaVersion = 1;

/// The learned artifact, detached from any session.
struct QTableExport {
    std::string config_digest;
    QTable values;
    VisitCounts visits;
    Hyperparams hyperparams;
    std::uint64_t seed = 0;

    bool operator==(const QTableExport&) const = default;
};

inline json to_json(const QTableExport& e) {
    json values = json::array();
    for (double v : e.values.values()) values.push_back(v);
    json visits = json::array();
    for (auto v : e.visits.values()) visits.push_back(v);
    return {{"schema_version", kQTableSchemaVersion},
            {"kind", "qtable"},
            {"config_digest", e.config_digest},
            {"num_states", e.values.num_states()},
            {"num_actions", e.values.num_actions()},
            {"values", values},
            {"visits", visits},
            {"hyperparams", to_json(e.hyperparams)},
            {"seed", e.seed}};
}

inline QTableExport qtable_export_from_json(const json& j) {
    constexpr std::string_view ctx = "qtable export";
    jsonio::expect_keys(j, {"schema_version", "kind", "config_digest", "num_states", "num_actions",
                            "values", "visits", "hyperparams", "seed"},
                        ctx);
    jsonio::check_version(j, kQTableSchemaVersion, ctx);
    if (jsonio::get<std::string>(j, "kind", ctx) != "qtable") throw FormatError("qtable export: wrong kind");

    QTableExport e;
    e.config_digest = jsonio::get<std::string>(j, "config_digest", ctx);
    const auto ns = jsonio::get<std::size_t>(j, "num_states", ctx);
    const auto na = jsonio::get<std::size_t>(j, "num_actions", ctx);
    if (na != kNumActions) throw FormatError("qtable export: num_actions must be 4");
    e.values = QTable(ns, na);
    e.visits = VisitCounts(ns, na);
    const auto values = jsonio::get<std::vector<double>>(j, "values", ctx);
    const auto visits = jsonio::get<std::vector<std::uint64_t>>(j, "visits", ctx);
    if (values.size() != ns * na || visits.size() != ns * na)
        throw FormatError("qtable export: table size does not match dimensions");
    std::copy(values.begin(), values.end(), e.values.mutable_values().begin());
    std::copy(visits.begin(), visits.end(), e.visits.mutable_values().begin());
    e.hyperparams = hyperparams_from_json(jsonio::field(j, "hyperparams", ctx));
    e.seed = jsonio::get<std::uint64_t>(j, "seed", ctx);
    return e;
}

inline void save_qtable_export(const std::filesystem::path& path, const QTableExport& e) {
    jsonio::write_file(path, to_json(e).dump(2) + "\n");
}

inline QTableExport load_qtable_export(const std::filesystem::path& path) {
    return qtable_export_from_json(jsonio::parse(jsonio::read_file(path), path.string()));
}

// ---- learning curve -------------------------------------------------------

inline constexpr const char* kLearningCurveHeader =
    "episode,score,steps,found_treasure,terminated_by,advised_steps,overridden_rewards";

inline std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::string learning_curve_row(const EpisodeLog& log) {
    std::ostringstream os;
    os << log.episode_index << ',' << format_number(log.score) << ',' << log.records.size() << ','
       << (log.found_treasure ? 1 : 0) << ',' << to_string(log.terminated_by) << ','
       << log.advised_steps() << ',' << log.overridden_rewards();
    return os.str();
}

/// One row per completed episode; episodes closed by a reset are skipped.
inline void write_learning_curve(std::ostream& out, const std::vector<EpisodeLog>& episodes) {
    out << kLearningCurveHeader << '\n';
    for (const auto& log : episodes)
        if (!log.aborted) out << learning_curve_row(log) << '\n';
}

inline void save_learning_curve(const std::filesystem::path& path, const std::vector<EpisodeLog>& episodes) {
    std::ostringstream os;
    write_learning_curve(os, episodes);
    jsonio::write_file(path, os.str());
}

} // namespace qhunt
