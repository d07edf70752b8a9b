#pragma once

// Headless operations behind the qhunt command-line tool.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "qhunt/bridge_protocol.hpp"
#include "qhunt/export.hpp"
#include "qhunt/hitl.hpp"
#include "qhunt/json_io.hpp"
#include "qhunt/snapshot_io.hpp"
#include "qhunt/value_iteration.hpp"

namespace qhunt {

struct TrainResult {
    LoopState state;
    bool bridge_failed = false;
};

/// Train `episodes` full episodes in Auto mode with no pacing. With a bridge
/// link every step is mirrored to the robot; a lost link stops training early.
inline TrainResult train(const MazeConfig& config, const Hyperparams& hp, std::size_t episodes, std::uint64_t seed,
                         std::shared_ptr<bridge::Link> link = nullptr) {
    require_valid(config);
    TrainingLoop loop(initial_loop_state(config, hp, seed));
    loop.set_bridge(std::move(link));
    while (loop.state().episodes.size() < episodes) {
        if (loop.run_cycle() == AdvanceResult::BridgeDown) return {loop.state(), true};
    }
    return {loop.state(), false};
}

/// Snapshot at `out`, learning curve next to it with a .csv extension.
inline std::filesystem::path save_training_outputs(const std::filesystem::path& out, const LoopState& st) {
    save_session_snapshot(out, SessionSnapshot{st, 1});
    std::filesystem::path csv = out;
    csv.replace_extension(".csv");
    save_learning_curve(csv, st.episodes);
    return csv;
}

inline QTableExport oracle_export(const MazeConfig& config, double gamma, double tol,
                                  ValueIterationResult* detail_out = nullptr) {
    require_valid(config);
    ValueIterationResult r = value_iteration_detailed(config, gamma, tol);
    Hyperparams hp;
    hp.set_gamma(gamma);
    QTableExport e{config_digest(config), r.q, make_visit_counts(config), hp, 0};
    if (detail_out) *detail_out = std::move(r);
    return e;
}

} // namespace qhunt
