#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "json.hpp"

namespace qhunt {

enum class EventKind : std::uint8_t {
    PhaseChanged,
    StepCompleted,
    EpisodeCompleted,
    QCellUpdated,
    ModeChanged,
    EpsilonChanged,
    AwaitingInput,
};

inline std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::PhaseChanged: return "PhaseChanged";
    case EventKind::StepCompleted: return "StepCompleted";
    case EventKind::EpisodeCompleted: return "EpisodeCompleted";
    case EventKind::QCellUpdated: return "QCellUpdated";
    case EventKind::ModeChanged: return "ModeChanged";
    case EventKind::EpsilonChanged: return "EpsilonChanged";
    case EventKind::AwaitingInput: return "AwaitingInput";
    }
    return "?";
}

struct TrainingEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::PhaseChanged;
    nlohmann::json payload;

    bool operator==(const TrainingEvent&) const = default;
};

inline nlohmann::json to_json(const TrainingEvent& e) {
    return {{"seq", e.seq}, {"kind", std::string(to_string(e.kind))}, {"payload", e.payload}};
}

} // namespace qhunt
