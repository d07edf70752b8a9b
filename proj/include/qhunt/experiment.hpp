#pragma once

// Advised-versus-autonomous sample-complexity experiment. Each seed trains
// twice from a zero table: once alone and once with a scripted teacher that
// advises the oracle's greedy action during the first k episodes. Both arms
// draw agent randomness from the same seed; the teacher has its own stream.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qhunt/error.hpp"
#include "qhunt/export.hpp"
#include "qhunt/json_io.hpp"
#include "qhunt/qlearn.hpp"
#include "qhunt/rng.hpp"
#include "qhunt/value_iteration.hpp"

namespace qhunt {

struct OracleAdvice {
    std::size_t first_k_episodes = 10;
    double advice_probability = 1.0;
};

struct ExperimentSpec {
    TrainingConfig config;
    std::vector<std::uint64_t> seeds;
    std::size_t episodes = 1000; ///< per-run cap; runs that never match are censored here
    OracleAdvice teacher;
    double oracle_tol = 1e-10;
    /// Stop each run once both metrics are settled instead of playing out the cap.
    bool stop_at_first_optimal = false;
};

enum class Arm { None, OracleAdvice };

inline std::string_view to_string(Arm a) { return a == Arm::None ? "None" : "OracleAdvice"; }

struct ArmRun {
    std::uint64_t seed = 0;
    Arm arm = Arm::None;
    /// 1-based index of the first episode whose trajectory is the oracle's; the cap when censored.
    std::size_t episodes_to_first_optimal = 0;
    bool censored = false;
    /// First episode after which the agent's own greedy rollout is the oracle's.
    std::size_t episodes_to_greedy_optimal = 0;
    bool greedy_censored = false;
    std::size_t advised_steps = 0;
    std::vector<EpisodeLog> curve;
};

struct ArmSummary {
    Arm arm = Arm::None;
    double median_episodes_to_first_optimal = 0;
    std::size_t censored = 0;
    double median_episodes_to_greedy_optimal = 0;
    std::size_t greedy_censored = 0;
    std::size_t advised_steps = 0;
};

struct ExperimentReport {
    std::size_t episode_cap = 0;
    std::vector<ArmRun> runs; ///< (seed, None), (seed, OracleAdvice), ... in seed order
    ArmSummary autonomous;
    ArmSummary advised;
};

inline void validate(const ExperimentSpec& spec) {
    std::vector<std::string> problems = validate_config(spec.config.maze);
    if (spec.seeds.empty()) problems.emplace_back("seeds must be nonempty");
    if (!(spec.teacher.advice_probability >= 0.0 && spec.teacher.advice_probability <= 1.0))
        problems.emplace_back("advice_probability must be in [0, 1]");
    if (spec.episodes == 0) problems.emplace_back("episodes must be positive");
    if (!(spec.oracle_tol > 0.0)) problems.emplace_back("oracle tolerance must be positive");
    if (!problems.empty()) throw ConfigError(std::move(problems));
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

/// True when the deterministic greedy rollout of `q` is the oracle trace.
inline bool greedy_matches(const QTable& q, const std::vector<TraceStep>& oracle_trace, const MazeConfig& config) {
    const auto trace = greedy_trace(q, config);
    if (trace.size() != oracle_trace.size()) return false;
    for (std::size_t i = 0; i < trace.size(); ++i)
        if (trace[i].before != oracle_trace[i].before || trace[i].action != oracle_trace[i].action) return false;
    return true;
}

inline ArmRun run_arm(const ExperimentSpec& spec, const QTable& oracle, const std::vector<TraceStep>& oracle_trace,
                      std::uint64_t seed, Arm arm) {
    const MazeConfig& cfg = spec.config.maze;
    QTable q = make_qtable(cfg);
    VisitCounts counts = make_visit_counts(cfg);
    Rng agent(seed);
    Rng teacher_rng(derive_seed(seed, 1));

    Teacher teacher;
    teacher.advise = [&](const EnvState& env, const ActionList& legal) -> std::optional<Action> {
        if (teacher_rng.uniform01() >= spec.teacher.advice_probability) return std::nullopt;
        return greedy_action(oracle, state_index(env, cfg), legal);
    };

    ArmRun run;
    run.seed = seed;
    run.arm = arm;
    run.episodes_to_first_optimal = spec.episodes;
    run.episodes_to_greedy_optimal = spec.episodes;
    bool found = false;
    bool greedy_found = false;
    for (std::size_t ep = 1; ep <= spec.episodes; ++ep) {
        const bool advising = arm == Arm::OracleAdvice && ep <= spec.teacher.first_k_episodes;
        EpisodeLog log = run_episode(cfg, q, counts, spec.config.hyperparams, agent, ep, advising ? &teacher : nullptr);
        run.advised_steps += log.advised_steps();
        if (!found && matches_trace(log, oracle_trace, cfg)) {
            found = true;
            run.episodes_to_first_optimal = ep;
        }
        if (!greedy_found && greedy_matches(q, oracle_trace, cfg)) {
            greedy_found = true;
            run.episodes_to_greedy_optimal = ep;
        }
        run.curve.push_back(std::move(log));
        if (spec.stop_at_first_optimal && found && greedy_found) break;
    }
    run.censored = !found;
    run.greedy_censored = !greedy_found;
    return run;
}

inline ArmSummary summarize(const std::vector<ArmRun>& runs, Arm arm) {
    ArmSummary s;
    s.arm = arm;
    std::vector<double> values, greedy;
    for (const auto& r : runs) {
        if (r.arm != arm) continue;
        values.push_back(static_cast<double>(r.episodes_to_first_optimal));
        greedy.push_back(static_cast<double>(r.episodes_to_greedy_optimal));
        s.censored += r.censored ? 1 : 0;
        s.greedy_censored += r.greedy_censored ? 1 : 0;
        s.advised_steps += r.advised_steps;
    }
    s.median_episodes_to_first_optimal = median(std::move(values));
    s.median_episodes_to_greedy_optimal = median(std::move(greedy));
    return s;
}

inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
    validate(spec);
    const MazeConfig& cfg = spec.config.maze;
    const QTable oracle = value_iteration(cfg, spec.config.hyperparams.gamma(), spec.oracle_tol);
    const auto oracle_trace = greedy_trace(oracle, cfg);

    ExperimentReport report;
    report.episode_cap = spec.episodes;
    for (std::uint64_t seed : spec.seeds) {
        report.runs.push_back(run_arm(spec, oracle, oracle_trace, seed, Arm::None));
        report.runs.push_back(run_arm(spec, oracle, oracle_trace, seed, Arm::OracleAdvice));
    }
    report.autonomous = summarize(report.runs, Arm::None);
    report.advised = summarize(report.runs, Arm::OracleAdvice);
    return report;
}

// ---- report output ----------------------------------------------------------

inline constexpr const char* kExperimentHeader =
    "seed,arm,episodes_to_first_optimal,censored,episodes_to_greedy_optimal,greedy_censored,advised_steps";

inline void write_experiment_csv(std::ostream& out, const ExperimentReport& r) {
    out << kExperimentHeader << '\n';
    for (const auto& run : r.runs)
        out << run.seed << ',' << to_string(run.arm) << ',' << run.episodes_to_first_optimal << ','
            << (run.censored ? 1 : 0) << ',' << run.episodes_to_greedy_optimal << ','
            << (run.greedy_censored ? 1 : 0) << ',' << run.advised_steps << '\n';
}

inline void write_experiment_curves(std::ostream& out, const ExperimentReport& r) {
    out << "seed,arm," << kLearningCurveHeader << '\n';
    for (const auto& run : r.runs)
        for (const auto& log : run.curve)
            out << run.seed << ',' << to_string(run.arm) << ',' << learning_curve_row(log) << '\n';
}

inline json to_json(const ArmSummary& s) {
    return {{"arm", std::string(to_string(s.arm))},
            {"median_episodes_to_first_optimal", s.median_episodes_to_first_optimal},
            {"censored", s.censored},
            {"median_episodes_to_greedy_optimal", s.median_episodes_to_greedy_optimal},
            {"greedy_censored", s.greedy_censored},
            {"advised_steps", s.advised_steps}};
}

inline json experiment_summary(const ExperimentSpec& spec, const ExperimentReport& r) {
    return {{"seeds", spec.seeds.size()},
            {"episode_cap", r.episode_cap},
            {"first_k_episodes", spec.teacher.first_k_episodes},
            {"advice_probability", spec.teacher.advice_probability},
            {"hyperparams", to_json(spec.config.hyperparams)},
            {"arms", {to_json(r.autonomous), to_json(r.advised)}}};
}

/// Writes <stem>.csv, <stem>_curves.csv and <stem>_summary.json next to `out`.
inline void save_experiment(const std::filesystem::path& out, const ExperimentSpec& spec, const ExperimentReport& r) {
    std::filesystem::path stem = out;
    stem.replace_extension();
    std::ostringstream rows, curves;
    write_experiment_csv(rows, r);
    write_experiment_curves(curves, r);
    jsonio::write_file(stem.string() + ".csv", rows.str());
    jsonio::write_file(stem.string() + "_curves.csv", curves.str());
    jsonio::write_file(stem.string() + "_summary.json", experiment_summary(spec, r).dump(2) + "\n");
}

} // namespace qhunt
