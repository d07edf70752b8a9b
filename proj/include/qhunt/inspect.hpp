#pragma once

// Plain-text dump of a session snapshot or a Q-table export.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qhunt/export.hpp"
#include "qhunt/json_io.hpp"
#include "qhunt/qlearn.hpp"
#include "qhunt/snapshot_io.hpp"

namespace qhunt {

inline char arrow(Action a) {
    switch (a) {
    case Action::Up: return '^';
    case Action::Down: return 'v';
    case Action::Left: return '<';
    case Action::Right: return '>';
    }
    return '?';
}

struct InspectInput {
    MazeConfig config;
    QTable q;
    VisitCounts counts;
    Hyperparams hp;
    std::uint64_t seed = 0;
    std::optional<std::vector<EpisodeLog>> episodes;
};

namespace detail {

inline std::string fixed(double v, int width, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%*.*f", width, precision, v);
    return buf;
}

inline char cell_mark(GridPos p, const MazeConfig& c) {
    if (p == c.exit) return 'E';
    if (p == c.treasure) return 'T';
    if (p == c.start) return 'S';
    return ' ';
}

} // namespace detail

inline void print_policy_grid(std::ostream& os, const InspectInput& in, bool slice) {
    const MazeConfig& c = in.config;
    os << "greedy policy, treasure " << (slice ? "collected" : "not collected") << ":\n";
    for (int r = 0; r < c.height; ++r) {
        os << "  ";
        for (int col = 0; col < c.width; ++col) {
            const GridPos p{r, col};
            const std::size_t s = state_index({p, slice, 0, false}, c);
            os << detail::cell_mark(p, c);
            if (p == c.exit) {
                os << "  exit  ";
            } else {
                const Action a = greedy_action(in.q, s, legal_actions_at(p, c));
                os << arrow(a) << detail::fixed(in.q(s, a), 7, 2);
            }
            os << (col + 1 < c.width ? " |" : "\n");
        }
    }
}

inline void print_visit_grid(std::ostream& os, const InspectInput& in, bool slice) {
    const MazeConfig& c = in.config;
    os << "visits, treasure " << (slice ? "collected" : "not collected") << ":\n";
    for (int r = 0; r < c.height; ++r) {
        os << "  ";
        for (int col = 0; col < c.width; ++col) {
            const std::size_t s = state_index({{r, col}, slice, 0, false}, c);
            std::uint64_t total = 0;
            for (Action a : kAllActions) total += in.counts(s, a);
            char buf[32];
            std::snprintf(buf, sizeof buf, "%8llu", static_cast<unsigned long long>(total));
            os << buf << (col + 1 < c.width ? " |" : "\n");
        }
    }
}

inline std::string inspect_text(const InspectInput& in, std::size_t max_episode_rows = 20) {
    std::ostringstream os;
    const MazeConfig& c = in.config;
    os << "grid " << c.width << "x" << c.height << ", start (" << c.start.row << "," << c.start.col << "), treasure ("
       << c.treasure.row << "," << c.treasure.col << "), exit (" << c.exit.row << "," << c.exit.col << "), "
       << c.walls.size() << " walls\n";
    os << "alpha " << in.hp.alpha() << "  gamma " << in.hp.gamma() << "  epsilon " << in.hp.epsilon() << "  seed "
       << in.seed << "\n\n";

    for (bool slice : {false, true}) print_policy_grid(os, in, slice);
    os << '\n';
    for (bool slice : {false, true}) print_visit_grid(os, in, slice);

    os << "\ngreedy path:";
    const auto trace = greedy_trace(in.q, c);
    for (const auto& t : trace) os << ' ' << to_letter(t.action);
    if (!trace.empty()) {
        const auto& last = trace.back().outcome;
        os << "  (" << trace.size() << " steps, ends " << to_string(last.event) << ")";
    }
    os << '\n';

    if (in.episodes) {
        const auto& eps = *in.episodes;
        os << "\nepisodes: " << eps.size() << '\n';
        if (!eps.empty()) {
            os << "  episode      score  steps  treasure  end      advised  overridden\n";
            const std::size_t from = eps.size() > max_episode_rows ? eps.size() - max_episode_rows : 0;
            if (from > 0) os << "  ... " << from << " earlier episodes\n";
            for (std::size_t i = from; i < eps.size(); ++i) {
                const auto& e = eps[i];
                char buf[160];
                std::snprintf(buf, sizeof buf, "  %7zu %10.2f %6zu  %-8s  %-7s  %7zu  %10zu\n", e.episode_index,
                              e.score, e.records.size(), e.found_treasure ? "yes" : "no",
                              e.aborted ? "reset" : std::string(to_string(e.terminated_by)).c_str(),
                              e.advised_steps(), e.overridden_rewards());
                os << buf;
            }
        }
    }
    return os.str();
}

inline InspectInput inspect_input(const SessionSnapshot& snap) {
    const LoopState& st = snap.loop;
    return {st.config, st.q, st.counts, st.hp, st.rng.seed(), st.episodes};
}

/// Load a session snapshot, or a Q-table export checked against `config`
/// (the default layout when none is given).
inline InspectInput load_inspect_input(const std::filesystem::path& path,
                                       const std::optional<MazeConfig>& config = std::nullopt) {
    const json j = jsonio::parse(jsonio::read_file(path), path.string());
    if (!j.is_object() || !j.contains("kind")) throw FormatError(path.string() + ": not a snapshot or Q-table export");
    const std::string kind = jsonio::get<std::string>(j, "kind", path.string());
    if (kind == "session") return inspect_input(session_snapshot_from_json(j));
    if (kind != "qtable") throw FormatError(path.string() + ": unknown kind '" + kind + "'");

    const QTableExport qx = qtable_export_from_json(j);
    const MazeConfig cfg = config.value_or(default_config());
    if (qx.config_digest != config_digest(cfg))
        throw FormatError(path.string() + ": config_digest " + qx.config_digest +
                          " does not match the maze config (" + config_digest(cfg) + ")");
    return {cfg, qx.values, qx.visits, qx.hyperparams, qx.seed, std::nullopt};
}

} // namespace qhunt
