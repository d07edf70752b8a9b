#pragma once

// Treasure-hunt grid world: states, actions, boundary masking, walls,
// rewards and termination. Everything here is a pure function of its
// arguments.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "qhunt/error.hpp"

namespace qhunt {

struct GridPos {
    int row = 0; ///< 0 = top
    int col = 0; ///< 0 = left

    auto operator<=>(const GridPos&) const = default;
};

inline std::string to_string(GridPos p) {
    return "(" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
}

/// The encoding 0..3 is stable and used for table indexing.
enum class Action : std::uint8_t { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr std::size_t kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kAllActions{
    Action::Up, Action::Down, Action::Left, Action::Right};

constexpr std::size_t index_of(Action a) { return static_cast<std::size_t>(a); }

constexpr GridPos offset(Action a) {
    switch (a) {
    case Action::Up: return {-1, 0};
    case Action::Down: return {1, 0};
    case Action::Left: return {0, -1};
    case Action::Right: return {0, 1};
    }
    return {0, 0};
}

constexpr GridPos moved(GridPos p, Action a) {
    const GridPos d = offset(a);
    return {p.row + d.row, p.col + d.col};
}

inline std::string_view to_string(Action a) {
    switch (a) {
    case Action::Up: return "Up";
    case Action::Down: return "Down";
    case Action::Left: return "Left";
    case Action::Right: return "Right";
    }
    return "?";
}

constexpr char to_letter(Action a) {
    switch (a) {
    case Action::Up: return 'U';
    case Action::Down: return 'D';
    case Action::Left: return 'L';
    case Action::Right: return 'R';
    }
    return '?';
}

inline std::optional<Action> action_from_letter(std::string_view s) {
    if (s == "U") return Action::Up;
    if (s == "D") return Action::Down;
    if (s == "L") return Action::Left;
    if (s == "R") return Action::Right;
    return std::nullopt;
}

inline std::optional<Action> action_from_name(std::string_view s) {
    for (Action a : kAllActions)
        if (to_string(a) == s) return a;
    return std::nullopt;
}

/// Undirected blocked edge between two 4-adjacent cells, stored with a <= b.
class WallEdge {
public:
    WallEdge(GridPos x, GridPos y) : a_(x < y ? x : y), b_(x < y ? y : x) {}

    GridPos a() const { return a_; }
    GridPos b() const { return b_; }

    bool adjacent() const {
        const int dr = b_.row - a_.row;
        const int dc = b_.col - a_.col;
        return (dr == 0 && (dc == 1 || dc == -1)) || (dc == 0 && (dr == 1 || dr == -1));
    }

    bool joins(GridPos x, GridPos y) const {
        return (a_ == x && b_ == y) || (a_ == y && b_ == x);
    }

    auto operator<=>(const WallEdge&) const = default;

private:
    GridPos a_;
    GridPos b_;
};

/// One reward per step; never summed.
struct RewardSpec {
    double treasure = 20.0;
    double exit = 30.0;
    double wall = -10.0;
    double step = -1.0;

    bool operator==(const RewardSpec&) const = default;
};

struct MazeConfig {
    int width = 3;
    int height = 3;
    GridPos start{0, 0};
    GridPos treasure{2, 0};
    GridPos exit{2, 2};
    std::vector<WallEdge> walls;
    RewardSpec rewards;
    int max_steps_per_episode = 100;

    bool operator==(const MazeConfig&) const = default;

    bool in_bounds(GridPos p) const {
        return p.row >= 0 && p.row < height && p.col >= 0 && p.col < width;
    }

    bool blocked(GridPos from, GridPos to) const {
        for (const auto& w : walls)
            if (w.joins(from, to)) return true;
        return false;
    }

    std::size_t num_cells() const { return static_cast<std::size_t>(width) * height; }
    std::size_t num_states() const { return 2 * num_cells(); }
};

/// The default 3x3 layout: start top-left, treasure bottom-left, exit
/// bottom-right, two walls around the centre cell.
inline MazeConfig default_config() {
    MazeConfig c;
    c.walls = {WallEdge{{0, 1}, {1, 1}}, WallEdge{{1, 1}, {1, 2}}};
    return c;
}

struct EnvState {
    GridPos pos;
    bool treasure_collected = false;
    int steps_taken = 0;
    bool done = false;

    bool operator==(const EnvState&) const = default;
};

enum class StepEvent : std::uint8_t { Step, WallHit, TreasureFound, ExitReached, Timeout };

inline std::string_view to_string(StepEvent e) {
    switch (e) {
    case StepEvent::Step: return "Step";
    case StepEvent::WallHit: return "WallHit";
    case StepEvent::TreasureFound: return "TreasureFound";
    case StepEvent::ExitReached: return "ExitReached";
    case StepEvent::Timeout: return "Timeout";
    }
    return "?";
}

inline std::optional<StepEvent> step_event_from_string(std::string_view s) {
    for (auto e : {StepEvent::Step, StepEvent::WallHit, StepEvent::TreasureFound,
                   StepEvent::ExitReached, StepEvent::Timeout})
        if (to_string(e) == s) return e;
    return std::nullopt;
}

struct StepOutcome {
    EnvState next;
    double reward = 0.0;
    StepEvent event = StepEvent::Step;

    bool operator==(const StepOutcome&) const = default;
};

/// Fixed-capacity ordered action set (order Up, Down, Left, Right).
class ActionList {
public:
    void push_back(Action a) { items_[size_++] = a; }

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    Action operator[](std::size_t i) const { return items_[i]; }
    const Action* begin() const { return items_.data(); }
    const Action* end() const { return items_.data() + size_; }

    bool contains(Action a) const {
        for (Action x : *this)
            if (x == a) return true;
        return false;
    }

    bool operator==(const ActionList& o) const {
        if (size_ != o.size_) return false;
        for (std::size_t i = 0; i < size_; ++i)
            if (items_[i] != o.items_[i]) return false;
        return true;
    }

private:
    std::array<Action, kNumActions> items_{};
    std::size_t size_ = 0;
};

/// Actions whose target cell lies inside the grid. Walls do not mask.
inline ActionList legal_actions_at(GridPos pos, const MazeConfig& config) {
    ActionList out;
    for (Action a : kAllActions)
        if (config.in_bounds(moved(pos, a))) out.push_back(a);
    return out;
}

inline ActionList legal_actions(const EnvState& state, const MazeConfig& config) {
    if (state.done) throw TerminalStateError();
    return legal_actions_at(state.pos, config);
}

inline EnvState reset(const MazeConfig& config) {
    return EnvState{config.start, false, 0, false};
}

/// Deterministic transition. Reward precedence: wall, treasure, exit, step.
inline StepOutcome step(const EnvState& state, Action action, const MazeConfig& config) {
    if (state.done) throw TerminalStateError("step on terminal state");
    const GridPos target = moved(state.pos, action);
    if (!config.in_bounds(target)) throw MaskedActionError();

    StepOutcome out;
    out.next = state;
    out.next.steps_taken = state.steps_taken + 1;

    if (config.blocked(state.pos, target)) {
        out.reward = config.rewards.wall;
        out.event = StepEvent::WallHit;
    } else {
        out.next.pos = target;
        if (target == config.treasure && !state.treasure_collected) {
            out.reward = config.rewards.treasure;
            out.event = StepEvent::TreasureFound;
            out.next.treasure_collected = true;
        } else if (target == config.exit) {
            out.reward = config.rewards.exit;
            out.event = StepEvent::ExitReached;
            out.next.done = true;
        } else {
            out.reward = config.rewards.step;
            out.event = StepEvent::Step;
        }
    }

    if (!out.next.done && out.next.steps_taken >= config.max_steps_per_episode) {
        out.next.done = true;
        out.event = StepEvent::Timeout;
    }
    return out;
}

/// index = (treasure_collected ? width*height : 0) + row*width + col
inline std::size_t state_index(const EnvState& state, const MazeConfig& config) {
    const std::size_t cell =
        static_cast<std::size_t>(state.pos.row) * config.width + state.pos.col;
    return (state.treasure_collected ? config.num_cells() : 0) + cell;
}

/// Inverse of state_index. steps_taken is 0; done is set for exit cells.
inline EnvState state_from_index(std::size_t index, const MazeConfig& config) {
    const std::size_t cells = config.num_cells();
    EnvState s;
    s.treasure_collected = index >= cells;
    const std::size_t cell = index % cells;
    s.pos = {static_cast<int>(cell / config.width), static_cast<int>(cell % config.width)};
    s.done = s.pos == config.exit;
    return s;
}

inline bool is_terminal_index(std::size_t index, const MazeConfig& config) {
    return state_from_index(index, config).done;
}

namespace detail {

inline std::vector<bool> reachable_from(GridPos origin, const MazeConfig& c) {
    std::vector<bool> seen(c.num_cells(), false);
    auto id = [&](GridPos p) { return static_cast<std::size_t>(p.row) * c.width + p.col; };
    std::queue<GridPos> frontier;
    frontier.push(origin);
    seen[id(origin)] = true;
    while (!frontier.empty()) {
        const GridPos p = frontier.front();
        frontier.pop();
        for (Action a : kAllActions) {
            const GridPos q = moved(p, a);
            if (!c.in_bounds(q) || c.blocked(p, q) || seen[id(q)]) continue;
            seen[id(q)] = true;
            frontier.push(q);
        }
    }
    return seen;
}

} // namespace detail

/// Check every MazeConfig invariant; an empty result means valid.
inline std::vector<std::string> validate_config(const MazeConfig& c) {
    std::vector<std::string> problems;
    if (c.width <= 0 || c.height <= 0) {
        problems.push_back("grid dimensions must be positive");
        return problems;
    }
    if (c.max_steps_per_episode <= 0)
        problems.push_back("max_steps_per_episode must be positive");

    bool specials_ok = true;
    const std::pair<const char*, GridPos> specials[] = {
        {"start", c.start}, {"treasure", c.treasure}, {"exit", c.exit}};
    for (const auto& [name, p] : specials) {
        if (!c.in_bounds(p)) {
            problems.push_back(std::string(name) + " " + to_string(p) + " is out of bounds");
            specials_ok = false;
        }
    }
    if (c.start == c.treasure || c.start == c.exit || c.treasure == c.exit) {
        problems.push_back("special cells must be distinct");
    }

    bool walls_ok = true;
    for (std::size_t i = 0; i < c.walls.size(); ++i) {
        const auto& w = c.walls[i];
        const std::string label = "wall " + to_string(w.a()) + "-" + to_string(w.b());
        if (!c.in_bounds(w.a()) || !c.in_bounds(w.b())) {
            problems.push_back(label + " references an out-of-bounds cell (dangling wall)");
            walls_ok = false;
        } else if (!w.adjacent()) {
            problems.push_back(label + " joins non-adjacent cells");
            walls_ok = false;
        }
        for (std::size_t j = 0; j < i; ++j)
            if (c.walls[j] == w) problems.push_back("duplicate " + label);
    }

    if (specials_ok && walls_ok) {
        const std::size_t exit_id = static_cast<std::size_t>(c.exit.row) * c.width + c.exit.col;
        if (!detail::reachable_from(c.start, c)[exit_id])
            problems.push_back("exit unreachable from start");
        if (!detail::reachable_from(c.treasure, c)[exit_id])
            problems.push_back("exit unreachable from treasure");
    }
    return problems;
}

inline const MazeConfig& require_valid(const MazeConfig& c) {
    auto problems = validate_config(c);
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return c;
}

} // namespace qhunt
