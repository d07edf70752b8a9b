#pragma once

// Human-in-the-loop training loop.
//
// One environment step is split into five phases that always run in this
// order: ObserveState, ChooseAction, ExecuteAction, ReceiveReward, UpdateQ.
// In Auto mode every phase runs without input. In Manual mode the loop parks
// in ChooseAction until advice arrives and in ReceiveReward until a reward
// override (or a confirmation of the automatic reward) arrives. Mode changes
// requested while a phase is executing are applied when that phase ends.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "qhunt/bridge_protocol.hpp"
#include "qhunt/events.hpp"
#include "qhunt/grid.hpp"
#include "qhunt/qlearn.hpp"
#include "qhunt/rng.hpp"

namespace qhunt {

enum class TrainingMode : std::uint8_t { Auto, Manual };

enum class StepPhase : std::uint8_t { ObserveState, ChooseAction, ExecuteAction, ReceiveReward, UpdateQ };

inline constexpr std::size_t kNumPhases = 5;

constexpr StepPhase next_phase(StepPhase p) {
    return static_cast<StepPhase>((static_cast<int>(p) + 1) % static_cast<int>(kNumPhases));
}

enum class AwaitingKind : std::uint8_t { Advice, Reward, BridgeDown };

inline std::string_view to_string(TrainingMode m) { return m == TrainingMode::Auto ? "Auto" : "Manual"; }

inline std::string_view to_string(StepPhase p) {
    switch (p) {
    case StepPhase::ObserveState: return "ObserveState";
    case StepPhase::ChooseAction: return "ChooseAction";
    case StepPhase::ExecuteAction: return "ExecuteAction";
    case StepPhase::ReceiveReward: return "ReceiveReward";
    case StepPhase::UpdateQ: return "UpdateQ";
    }
    return "?";
}

inline std::string_view to_string(AwaitingKind k) {
    switch (k) {
    case AwaitingKind::Advice: return "Advice";
    case AwaitingKind::Reward: return "Reward";
    case AwaitingKind::BridgeDown: return "BridgeDown";
    }
    return "?";
}

inline std::optional<TrainingMode> training_mode_from_string(std::string_view s) {
    if (s == "Auto" || s == "auto") return TrainingMode::Auto;
    if (s == "Manual" || s == "manual") return TrainingMode::Manual;
    return std::nullopt;
}

inline std::optional<StepPhase> step_phase_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kNumPhases; ++i) {
        const auto p = static_cast<StepPhase>(i);
        if (to_string(p) == s) return p;
    }
    return std::nullopt;
}

inline constexpr double kMinRewardOverride = -30.0;
inline constexpr double kMaxRewardOverride = 30.0;

struct LoopStatus {
    TrainingMode mode = TrainingMode::Auto;
    StepPhase phase = StepPhase::ObserveState;
    std::size_t current_state = 0;
    std::optional<Action> last_action;
    std::optional<double> last_reward;
    std::size_t episode = 0;
    double score = 0.0;
    std::optional<AwaitingKind> awaiting;

    bool operator==(const LoopStatus&) const = default;
};

/// Outcome of submitting a human input.
struct Verdict {
    bool accepted = true;
    std::string reason;

    static Verdict ok() { return {}; }
    static Verdict reject(std::string why) { return {false, std::move(why)}; }
    explicit operator bool() const { return accepted; }
};

enum class AdvanceResult : std::uint8_t {
    Advanced,      ///< the current phase ran and the loop moved to the next one
    AwaitingInput, ///< parked: Manual mode needs advice or a reward first
    BridgeDown,    ///< the robot did not answer; nothing was committed
};

/// Work carried between the phases of the step in progress.
struct PendingStep {
    std::size_t s = 0;
    std::optional<Action> action;
    ActionSource action_source = ActionSource::Greedy;
    std::optional<StepOutcome> outcome;
    std::optional<double> reward;
    RewardSource reward_source = RewardSource::Automatic;

    bool operator==(const PendingStep&) const = default;
};

/// Everything the loop owns. Plain data, so it can be copied into snapshots.
struct LoopState {
    MazeConfig config;
    Hyperparams hp;
    QTable q;
    VisitCounts counts;
    Rng rng;

    TrainingMode mode = TrainingMode::Auto;
    StepPhase phase = StepPhase::ObserveState;
    EnvState env;
    std::size_t episode = 0;
    double score = 0.0;
    std::optional<Action> last_action;
    std::optional<double> last_reward;
    PendingStep pending;

    // Single-slot mailboxes; latest submission wins.
    std::optional<Action> advice_slot;
    std::optional<double> reward_slot;

    std::vector<StepRecord> current_records;
    std::vector<EpisodeLog> episodes;

    bool operator==(const LoopState&) const = default;
};

inline LoopState initial_loop_state(MazeConfig config, Hyperparams hp, std::uint64_t seed) {
    require_valid(config);
    LoopState st;
    st.q = make_qtable(config);
    st.counts = make_visit_counts(config);
    st.env = reset(config);
    st.config = std::move(config);
    st.hp = hp;
    st.rng = Rng(seed);
    return st;
}

inline nlohmann::json step_record_payload(const StepRecord& r, const MazeConfig& c) {
    const auto cell = state_from_index(r.s, c).pos;
    const auto next = state_from_index(r.s_next, c).pos;
    return {{"s", r.s},
            {"action", std::string(to_string(r.a))},
            {"r", r.r},
            {"s_next", r.s_next},
            {"done", r.done},
            {"reward_source", std::string(to_string(r.reward_source))},
            {"action_source", std::string(to_string(r.action_source))},
            {"event", std::string(to_string(r.event))},
            {"cell", {cell.row, cell.col}},
            {"next_cell", {next.row, next.col}}};
}

inline std::optional<AwaitingKind> awaiting_kind(const LoopState& st) {
    if (st.mode != TrainingMode::Manual) return std::nullopt;
    if (st.phase == StepPhase::ChooseAction) return AwaitingKind::Advice;
    if (st.phase == StepPhase::ReceiveReward) return AwaitingKind::Reward;
    return std::nullopt;
}

inline LoopStatus loop_status(const LoopState& st) {
    LoopStatus out;
    out.mode = st.mode;
    out.phase = st.phase;
    out.current_state = state_index(st.env, st.config);
    out.last_action = st.last_action;
    out.last_reward = st.last_reward;
    out.episode = st.episode;
    out.score = st.score;
    out.awaiting = awaiting_kind(st);
    return out;
}

class TrainingLoop {
public:
    using EventSink = std::function<void(EventKind, nlohmann::json)>;

    explicit TrainingLoop(LoopState state) : state_(std::move(state)) {}
    TrainingLoop(MazeConfig config, Hyperparams hp, std::uint64_t seed)
        : state_(initial_loop_state(std::move(config), hp, seed)) {}

    void set_event_sink(EventSink sink) { sink_ = std::move(sink); }
    void set_bridge(std::shared_ptr<bridge::Link> link) { bridge_ = std::move(link); }

    const LoopState& state() const { return state_; }
    const MazeConfig& config() const { return state_.config; }
    const QTable& q() const { return state_.q; }
    const VisitCounts& counts() const { return state_.counts; }
    const Hyperparams& hyperparams() const { return state_.hp; }
    const std::vector<EpisodeLog>& episodes() const { return state_.episodes; }
    const std::vector<StepRecord>& current_records() const { return state_.current_records; }

    std::optional<AwaitingKind> awaiting() const { return awaiting_kind(state_); }
    LoopStatus status() const { return loop_status(state_); }

    /// Legal actions of the current environment state.
    ActionList legal_now() const {
        if (state_.env.done) return {};
        return legal_actions(state_.env, state_.config);
    }

    /// Execute the current phase and move on, or report why the loop cannot.
    AdvanceResult advance_phase() {
        in_phase_ = true;
        AdvanceResult result = AdvanceResult::Advanced;
        try {
            result = run_phase();
        } catch (...) {
            in_phase_ = false;
            throw;
        }
        in_phase_ = false;

        if (result == AdvanceResult::Advanced) {
            state_.phase = next_phase(state_.phase);
            apply_pending_mode();
            emit(EventKind::PhaseChanged, {{"phase", std::string(to_string(state_.phase))}});
            announce_awaiting();
        } else {
            apply_pending_mode();
            if (result == AdvanceResult::BridgeDown) emit(EventKind::AwaitingInput, {{"kind", "BridgeDown"}});
        }
        return result;
    }

    /// Advance until the cycle in progress completes (the loop is back at
    /// ObserveState after an UpdateQ) or the loop parks.
    AdvanceResult run_cycle() {
        do {
            const AdvanceResult r = advance_phase();
            if (r != AdvanceResult::Advanced) return r;
        } while (state_.phase != StepPhase::ObserveState);
        return AdvanceResult::Advanced;
    }

    void set_mode(TrainingMode mode) {
        if (in_phase_) {
            pending_mode_ = mode;
            return;
        }
        apply_mode(mode);
    }

    Verdict set_epsilon(double value) {
        if (!(value >= 0.0 && value <= 1.0)) return Verdict::reject("epsilon must be in [0, 1]");
        state_.hp.set_epsilon(value);
        emit(EventKind::EpsilonChanged, {{"epsilon", value}});
        return Verdict::ok();
    }

    Verdict submit_advice(Action a) {
        if (state_.mode != TrainingMode::Manual || state_.phase != StepPhase::ChooseAction)
            return Verdict::reject("not awaiting advice");
        if (!legal_now().contains(a)) return Verdict::reject("action is masked here");
        state_.advice_slot = a;
        return Verdict::ok();
    }

    Verdict submit_reward_override(double value) {
        if (state_.mode != TrainingMode::Manual || state_.phase != StepPhase::ReceiveReward)
            return Verdict::reject("not awaiting reward");
        if (!(value >= kMinRewardOverride && value <= kMaxRewardOverride))
            return Verdict::reject("reward override must be within [-30, 30]");
        state_.reward_slot = value;
        return Verdict::ok();
    }

    /// Accept the automatic reward of the pending step as the human's reward.
    Verdict confirm_reward() {
        if (state_.mode != TrainingMode::Manual || state_.phase != StepPhase::ReceiveReward)
            return Verdict::reject("not awaiting reward");
        state_.reward_slot = state_.pending.outcome->reward;
        return Verdict::ok();
    }

    /// Abandon the episode in progress (if any) and start a new one. Q and
    /// visit counts are kept. The abandoned episode is closed as an aborted
    /// Timeout so learning curves can skip it.
    void reset_episode() {
        const bool started = !state_.current_records.empty() || state_.phase != StepPhase::ObserveState ||
                             state_.env.steps_taken > 0;
        if (started) {
            close_episode(true);
        }
        state_.env = reset(state_.config);
        state_.score = 0.0;
        state_.pending = {};
        state_.advice_slot.reset();
        state_.reward_slot.reset();
        state_.last_action.reset();
        state_.last_reward.reset();
        state_.phase = StepPhase::ObserveState;
        emit(EventKind::PhaseChanged, {{"phase", "ObserveState"}, {"reset", true}});
    }

private:
    AdvanceResult run_phase() {
        LoopState& st = state_;
        switch (st.phase) {
        case StepPhase::ObserveState: {
            if (bridge_ && st.env.steps_taken == 0) {
                auto reply = bridge_->send(bridge::Reset{st.config.start, 0});
                if (!reply || reply->status != bridge::Status::Ok) return AdvanceResult::BridgeDown;
            }
            st.pending = {};
            st.pending.s = state_index(st.env, st.config);
            return AdvanceResult::Advanced;
        }
        case StepPhase::ChooseAction: {
            if (st.mode == TrainingMode::Manual) {
                if (!st.advice_slot) return AdvanceResult::AwaitingInput;
                st.pending.action = *st.advice_slot;
                st.pending.action_source = ActionSource::Advised;
                st.advice_slot.reset();
            } else {
                const Selection sel = select_action(st.q, st.pending.s, legal_actions(st.env, st.config),
                                                    st.hp.epsilon(), st.rng);
                st.pending.action = sel.action;
                st.pending.action_source = sel.source;
            }
            st.last_action = st.pending.action;
            return AdvanceResult::Advanced;
        }
        case StepPhase::ExecuteAction: {
            const Action a = *st.pending.action;
            if (bridge_) {
                auto reply = bridge_->send(bridge::Move{a});
                if (!reply || reply->status != bridge::Status::Ok) return AdvanceResult::BridgeDown;
            }
            st.pending.outcome = step(st.env, a, st.config);
            st.env = st.pending.outcome->next;
            return AdvanceResult::Advanced;
        }
        case StepPhase::ReceiveReward: {
            if (st.mode == TrainingMode::Manual) {
                if (!st.reward_slot) return AdvanceResult::AwaitingInput;
                st.pending.reward = *st.reward_slot;
                st.pending.reward_source = RewardSource::HumanOverride;
                st.reward_slot.reset();
            } else {
                st.pending.reward = st.pending.outcome->reward;
                st.pending.reward_source = RewardSource::Automatic;
            }
            st.last_reward = st.pending.reward;
            st.score += *st.pending.reward;
            return AdvanceResult::Advanced;
        }
        case StepPhase::UpdateQ: {
            StepRecord rec;
            rec.s = st.pending.s;
            rec.a = *st.pending.action;
            rec.r = *st.pending.reward;
            rec.s_next = state_index(st.pending.outcome->next, st.config);
            rec.done = st.pending.outcome->next.done;
            rec.reward_source = st.pending.reward_source;
            rec.action_source = st.pending.action_source;
            rec.event = st.pending.outcome->event;

            const double old_value = st.q(rec.s, rec.a);
            ++st.counts(rec.s, rec.a);
            const double new_value = q_update(st.q, rec, st.config, st.hp);
            st.current_records.push_back(rec);

            emit(EventKind::QCellUpdated, {{"state", rec.s},
                                           {"action", std::string(to_string(rec.a))},
                                           {"old", old_value},
                                           {"new", new_value},
                                           {"visits", st.counts(rec.s, rec.a)}});
            emit(EventKind::StepCompleted, {{"episode", st.episode},
                                            {"score", st.score},
                                            {"record", step_record_payload(rec, st.config)}});
            if (rec.done) {
                close_episode(false);
                st.env = reset(st.config);
                st.score = 0.0;
            }
            st.pending = {};
            return AdvanceResult::Advanced;
        }
        }
        return AdvanceResult::Advanced;
    }

    void close_episode(bool aborted) {
        EpisodeLog log = make_episode_log(state_.episode, std::move(state_.current_records), state_.config, aborted);
        state_.current_records.clear();
        emit(EventKind::EpisodeCompleted, {{"episode", log.episode_index},
                                           {"score", log.score},
                                           {"steps", log.records.size()},
                                           {"found_treasure", log.found_treasure},
                                           {"terminated_by", std::string(to_string(log.terminated_by))},
                                           {"aborted", log.aborted}});
        state_.episodes.push_back(std::move(log));
        ++state_.episode;
    }

    void apply_pending_mode() {
        if (pending_mode_) {
            const TrainingMode m = *pending_mode_;
            pending_mode_.reset();
            apply_mode(m);
        }
    }

    void apply_mode(TrainingMode mode) {
        if (mode == state_.mode) return;
        state_.mode = mode;
        if (mode == TrainingMode::Auto) {
            state_.advice_slot.reset();
            state_.reward_slot.reset();
        }
        emit(EventKind::ModeChanged, {{"mode", std::string(to_string(mode))}});
        announce_awaiting();
    }

    void announce_awaiting() {
        if (auto kind = awaiting()) emit(EventKind::AwaitingInput, {{"kind", std::string(to_string(*kind))}});
    }

    void emit(EventKind kind, nlohmann::json payload) {
        if (sink_) sink_(kind, std::move(payload));
    }

    LoopState state_;
    EventSink sink_;
    std::shared_ptr<bridge::Link> bridge_;
    bool in_phase_ = false;
    std::optional<TrainingMode> pending_mode_;
};

} // namespace qhunt
