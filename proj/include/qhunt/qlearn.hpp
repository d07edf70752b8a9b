#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qhunt/error.hpp"
#include "qhunt/grid.hpp"
#include "qhunt/rng.hpp"

namespace qhunt {

/// Dense [state][action] table. Dimensions are fixed at construction.
template <typename T>
class DenseTable {
public:
    DenseTable() = default;
    DenseTable(std::size_t num_states, std::size_t num_actions)
        : num_states_(num_states), num_actions_(num_actions),
          values_(num_states * num_actions, T{}) {}

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    T operator()(std::size_t s, Action a) const { return values_[offset(s, a)]; }
    T& operator()(std::size_t s, Action a) { return values_[offset(s, a)]; }

    std::span<const T> row(std::size_t s) const {
        check_state(s);
        return {values_.data() + s * num_actions_, num_actions_};
    }
    std::span<const T> values() const { return values_; }
    std::span<T> mutable_values() { return values_; }

    bool operator==(const DenseTable&) const = default;

private:
    void check_state(std::size_t s) const {
        if (s >= num_states_) throw Error("state index " + std::to_string(s) + " out of range");
    }
    std::size_t offset(std::size_t s, Action a) const {
        check_state(s);
        const std::size_t ai = index_of(a);
        if (ai >= num_actions_) throw Error("action index out of range");
        return s * num_actions_ + ai;
    }

    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<T> values_;
};

using QTable = DenseTable<double>;
using VisitCounts = DenseTable<std::uint64_t>;

inline QTable make_qtable(const MazeConfig& c) { return QTable(c.num_states(), kNumActions); }
inline VisitCounts make_visit_counts(const MazeConfig& c) {
    return VisitCounts(c.num_states(), kNumActions);
}

template <typename T>
T table_sum(const DenseTable<T>& t) {
    T total{};
    for (T v : t.values()) total += v;
    return total;
}

/// Learning rate, discount and exploration rate; ranges are checked on every write.
class Hyperparams {
public:
    Hyperparams() = default;
    Hyperparams(double alpha, double gamma, double epsilon) {
        set_alpha(alpha);
        set_gamma(gamma);
        set_epsilon(epsilon);
    }

    double alpha() const { return alpha_; }
    double gamma() const { return gamma_; }
    double epsilon() const { return epsilon_; }

    void set_alpha(double v) {
        if (!(v > 0.0 && v <= 1.0)) throw Error("alpha must be in (0, 1]");
        alpha_ = v;
    }
    void set_gamma(double v) {
        if (!(v >= 0.0 && v < 1.0)) throw Error("gamma must be in [0, 1)");
        gamma_ = v;
    }
    void set_epsilon(double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error("epsilon must be in [0, 1]");
        epsilon_ = v;
    }

    bool operator==(const Hyperparams&) const = default;

private:
    double alpha_ = 0.05;
    double gamma_ = 0.9;
    double epsilon_ = 0.3;
};

enum class RewardSource : std::uint8_t { Automatic, HumanOverride };
enum class ActionSource : std::uint8_t { Greedy, Exploratory, Advised };

inline std::string_view to_string(RewardSource s) {
    return s == RewardSource::Automatic ? "Automatic" : "HumanOverride";
}
inline std::string_view to_string(ActionSource s) {
    switch (s) {
    case ActionSource::Greedy: return "Greedy";
    case ActionSource::Exploratory: return "Exploratory";
    case ActionSource::Advised: return "Advised";
    }
    return "?";
}
inline std::optional<RewardSource> reward_source_from_string(std::string_view s) {
    if (s == "Automatic") return RewardSource::Automatic;
    if (s == "HumanOverride") return RewardSource::HumanOverride;
    return std::nullopt;
}
inline std::optional<ActionSource> action_source_from_string(std::string_view s) {
    if (s == "Greedy") return ActionSource::Greedy;
    if (s == "Exploratory") return ActionSource::Exploratory;
    if (s == "Advised") return ActionSource::Advised;
    return std::nullopt;
}

struct StepRecord {
    std::size_t s = 0;
    Action a = Action::Up;
    double r = 0.0;
    std::size_t s_next = 0;
    bool done = false;
    RewardSource reward_source = RewardSource::Automatic;
    ActionSource action_source = ActionSource::Greedy;
    StepEvent event = StepEvent::Step; ///< environment event of the transition

    bool operator==(const StepRecord&) const = default;
};

enum class Termination : std::uint8_t { Exit, Timeout };

inline std::string_view to_string(Termination t) { return t == Termination::Exit ? "Exit" : "Timeout"; }

struct EpisodeLog {
    std::size_t episode_index = 0;
    std::vector<StepRecord> records;
    double score = 0.0;
    bool found_treasure = false;
    Termination terminated_by = Termination::Timeout;
    /// Closed by a reset before reaching a terminal state; excluded from learning curves.
    bool aborted = false;

    bool operator==(const EpisodeLog&) const = default;

    std::size_t advised_steps() const {
        return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const StepRecord& r) {
            return r.action_source == ActionSource::Advised;
        }));
    }
    std::size_t overridden_rewards() const {
        return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const StepRecord& r) {
            return r.reward_source == RewardSource::HumanOverride;
        }));
    }
};

/// Close out an episode from its records. The treasure counts as found when
/// any successor carries the flag, which also covers a pickup on a step that
/// timed out.
inline EpisodeLog make_episode_log(std::size_t index, std::vector<StepRecord> records, const MazeConfig& config,
                                   bool aborted = false) {
    EpisodeLog log;
    log.episode_index = index;
    log.aborted = aborted;
    for (const auto& r : records) {
        log.score += r.r;
        if (r.s_next >= config.num_cells()) log.found_treasure = true;
    }
    log.terminated_by = (!records.empty() && records.back().event == StepEvent::ExitReached)
                            ? Termination::Exit
                            : Termination::Timeout;
    log.records = std::move(records);
    return log;
}

/// Q(s,a) <- Q(s,a) + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)).
///
/// The max runs over `next_legal`, the unmasked actions of s'. When the
/// record is terminal the bootstrap term is 0 and `next_legal` is ignored.
/// Returns the new value of the single modified entry.
inline double q_update(QTable& q, const StepRecord& rec, const ActionList& next_legal,
                       double alpha, double gamma) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must be in [0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("gamma must be in [0, 1)");
    if (!std::isfinite(rec.r)) throw Error("non-finite reward");

    double bootstrap = 0.0;
    if (!rec.done) {
        if (next_legal.empty()) throw Error("q_update: non-terminal successor without actions");
        bootstrap = q(rec.s_next, next_legal[0]);
        for (Action a : next_legal) bootstrap = std::max(bootstrap, q(rec.s_next, a));
    }
    double& entry = q(rec.s, rec.a);
    if (!std::isfinite(entry) || !std::isfinite(bootstrap)) throw Error("non-finite Q value");
    const double updated = entry + alpha * (rec.r + gamma * bootstrap - entry);
    if (!std::isfinite(updated)) throw Error("Q update produced a non-finite value");
    entry = updated;
    return updated;
}

inline double q_update(QTable& q, const StepRecord& rec, const MazeConfig& config,
                       const Hyperparams& hp) {
    const ActionList next_legal =
        rec.done ? ActionList{} : legal_actions_at(state_from_index(rec.s_next, config).pos, config);
    return q_update(q, rec, next_legal, hp.alpha(), hp.gamma());
}

struct Selection {
    Action action;
    ActionSource source;

    bool operator==(const Selection&) const = default;
};

/// Epsilon-greedy over the legal actions only.
///
/// Draw order: one uniform draw decides exploration; an exploratory step then
/// draws a uniform index into `legal`; a greedy step draws a uniform index
/// into the tied maximisers only when more than one action ties.
inline Selection select_action(const QTable& q, std::size_t s, const ActionList& legal,
                               double epsilon, Rng& rng) {
    if (legal.empty()) throw Error("select_action: empty legal action set");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error("epsilon must be in [0, 1]");

    if (rng.uniform01() < epsilon) {
        return {legal[static_cast<std::size_t>(rng.below(legal.size()))], ActionSource::Exploratory};
    }
    ActionList best;
    double best_value = 0.0;
    for (Action a : legal) {
        const double v = q(s, a);
        if (best.empty() || v > best_value) {
            best = ActionList{};
            best.push_back(a);
            best_value = v;
        } else if (v == best_value) {
            best.push_back(a);
        }
    }
    if (best.size() == 1) return {best[0], ActionSource::Greedy};
    return {best[static_cast<std::size_t>(rng.below(best.size()))], ActionSource::Greedy};
}

/// Optional per-step teacher consulted by run_episode. Either callback may be empty.
struct Teacher {
    /// Return an action to take instead of the epsilon-greedy choice.
    std::function<std::optional<Action>(const EnvState&, const ActionList&)> advise;
    /// Return a reward that replaces the automatic one.
    std::function<std::optional<double>(const EnvState& before, Action, const StepOutcome&)> reward;
};

/// Run one full episode from reset, learning online.
inline EpisodeLog run_episode(const MazeConfig& config, QTable& q, VisitCounts& counts,
                              const Hyperparams& hp, Rng& rng, std::size_t episode_index = 0,
                              const Teacher* teacher = nullptr) {
    EnvState env = reset(config);
    std::vector<StepRecord> records;
    while (!env.done) {
        const std::size_t s = state_index(env, config);
        const ActionList legal = legal_actions(env, config);

        std::optional<Action> advice;
        if (teacher && teacher->advise) advice = teacher->advise(env, legal);
        Selection sel{};
        if (advice) {
            if (!legal.contains(*advice)) throw Error("teacher advised a masked action");
            sel = {*advice, ActionSource::Advised};
        } else {
            sel = select_action(q, s, legal, hp.epsilon(), rng);
        }

        const StepOutcome out = step(env, sel.action, config);
        StepRecord rec;
        rec.s = s;
        rec.a = sel.action;
        rec.r = out.reward;
        rec.s_next = state_index(out.next, config);
        rec.done = out.next.done;
        rec.action_source = sel.source;
        rec.event = out.event;
        if (teacher && teacher->reward) {
            if (auto r = teacher->reward(env, sel.action, out)) {
                rec.r = *r;
                rec.reward_source = RewardSource::HumanOverride;
            }
        }

        ++counts(s, sel.action);
        q_update(q, rec, config, hp);
        records.push_back(rec);
        env = out.next;
    }
    return make_episode_log(episode_index, std::move(records), config);
}

/// argmax over legal actions; ties go to the lowest action encoding.
inline Action greedy_action(const QTable& q, std::size_t s, const ActionList& legal) {
    Action best = legal[0];
    for (Action a : legal)
        if (q(s, a) > q(s, best)) best = a;
    return best;
}

/// Deterministic greedy policy for every non-terminal state.
inline std::map<std::size_t, Action> greedy_policy(const QTable& q, const MazeConfig& config) {
    std::map<std::size_t, Action> policy;
    for (std::size_t s = 0; s < config.num_states(); ++s) {
        const EnvState st = state_from_index(s, config);
        if (st.done) continue;
        policy.emplace(s, greedy_action(q, s, legal_actions_at(st.pos, config)));
    }
    return policy;
}

struct TraceStep {
    EnvState before;
    Action action;
    StepOutcome outcome;
};

/// Roll out the deterministic greedy policy from the start cell until
/// termination or the configured step cap.
inline std::vector<TraceStep> greedy_trace(const QTable& q, const MazeConfig& config) {
    std::vector<TraceStep> trace;
    EnvState env = reset(config);
    while (!env.done) {
        const std::size_t s = state_index(env, config);
        const Action a = greedy_action(q, s, legal_actions(env, config));
        const StepOutcome out = step(env, a, config);
        trace.push_back({env, a, out});
        env = out.next;
    }
    return trace;
}

/// True when the episode visited exactly the (state, action) sequence of `trace`.
inline bool matches_trace(const EpisodeLog& log, const std::vector<TraceStep>& trace,
                          const MazeConfig& config) {
    if (log.records.size() != trace.size()) return false;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (log.records[i].s != state_index(trace[i].before, config) ||
            log.records[i].a != trace[i].action)
            return false;
    }
    return true;
}

} // namespace qhunt
