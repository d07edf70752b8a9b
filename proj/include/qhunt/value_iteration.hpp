#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <vector>

#include "qhunt/error.hpp"
#include "qhunt/grid.hpp"
#include "qhunt/qlearn.hpp"

namespace qhunt {

struct ValueIterationResult {
    QTable q;
    std::size_t sweeps = 0;
    /// Max absolute change of each sweep, in order.
    std::vector<double> change_history;
};

namespace detail {

// One precomputed (s, a) -> (r, s', terminal) transition.
struct Transition {
    std::size_t s;
    Action a;
    double reward;
    std::size_t next;
    bool terminal;
};

inline std::vector<Transition> enumerate_transitions(const MazeConfig& config) {
    // The step cap is not part of the Markov state; lift it so only the exit terminates.
    MazeConfig uncapped = config;
    uncapped.max_steps_per_episode = INT_MAX;

    std::vector<Transition> out;
    for (std::size_t s = 0; s < config.num_states(); ++s) {
        EnvState st = state_from_index(s, config);
        if (st.done) continue;
        for (Action a : legal_actions_at(st.pos, config)) {
            const StepOutcome o = step(st, a, uncapped);
            out.push_back({s, a, o.reward, state_index(o.next, config), o.next.done});
        }
    }
    return out;
}

inline double best_legal(const QTable& q, std::size_t s, const MazeConfig& config) {
    const ActionList legal = legal_actions_at(state_from_index(s, config).pos, config);
    double best = q(s, legal[0]);
    for (Action a : legal) best = std::max(best, q(s, a));
    return best;
}

} // namespace detail

/// Synchronous (Jacobi) sweeps of the Bellman optimality operator until the
/// largest per-entry change drops below `tol`. Terminal successors contribute
/// zero continuation; masked entries stay 0 and never enter a max.
inline ValueIterationResult value_iteration_detailed(const MazeConfig& config, double gamma,
                                                     double tol,
                                                     std::size_t max_sweeps = 1'000'000) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("gamma must be in [0, 1)");
    if (!(tol > 0.0)) throw Error("tol must be positive");
    require_valid(config);

    const auto transitions = detail::enumerate_transitions(config);
    ValueIterationResult result{make_qtable(config), 0, {}};
    QTable next = result.q;

    while (result.sweeps < max_sweeps) {
        double change = 0.0;
        for (const auto& t : transitions) {
            const double cont = t.terminal ? 0.0 : detail::best_legal(result.q, t.next, config);
            const double v = t.reward + gamma * cont;
            change = std::max(change, std::abs(v - result.q(t.s, t.a)));
            next(t.s, t.a) = v;
        }
        result.q = next;
        ++result.sweeps;
        result.change_history.push_back(change);
        if (change < tol) return result;
    }
    throw Error("value iteration did not converge within " + std::to_string(max_sweeps) + " sweeps");
}

inline QTable value_iteration(const MazeConfig& config, double gamma, double tol) {
    return value_iteration_detailed(config, gamma, tol).q;
}

/// max over legal (s,a) of |Q(s,a) - (R(s,a) + gamma * max_a' Q(s',a'))|.
inline double bellman_residual(const QTable& q, const MazeConfig& config, double gamma) {
    double worst = 0.0;
    for (const auto& t : detail::enumerate_transitions(config)) {
        const double cont = t.terminal ? 0.0 : detail::best_legal(q, t.next, config);
        worst = std::max(worst, std::abs(q(t.s, t.a) - (t.reward + gamma * cont)));
    }
    return worst;
}

} // namespace qhunt
