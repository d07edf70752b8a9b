#include "qhunt/experiment.hpp"

#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

namespace qhunt {
namespace {

ExperimentSpec small_spec(std::vector<std::uint64_t> seeds, std::size_t episodes = 300) {
    ExperimentSpec spec;
    spec.seeds = std::move(seeds);
    spec.episodes = episodes;
    return spec;
}

} // namespace

TEST(Median, OddEvenEmpty) {
    EXPECT_EQ(median({3, 1, 2}), 2.0);
    EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
    EXPECT_EQ(median({}), 0.0);
}

TEST(Experiment, ValidationCollectsProblems) {
    ExperimentSpec spec;
    spec.teacher.advice_probability = 1.5;
    spec.episodes = 0;
    try {
        validate(spec);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.problems().size(), 3u);
    }
}

TEST(Experiment, FullAdviceMatchesOracleFirstEpisode) {
    const auto report = run_experiment(small_spec({1, 2, 3}));
    for (const auto& run : report.runs) {
        if (run.arm != Arm::OracleAdvice) continue;
        EXPECT_EQ(run.episodes_to_first_optimal, 1u);
        EXPECT_FALSE(run.censored);
        // Ten advised four-step episodes.
        EXPECT_EQ(run.advised_steps, 40u);
    }
    EXPECT_EQ(report.advised.median_episodes_to_first_optimal, 1.0);
}

TEST(Experiment, AutonomousArmNeverAdvised) {
    const auto report = run_experiment(small_spec({4, 5}));
    for (const auto& run : report.runs)
        if (run.arm == Arm::None) EXPECT_EQ(run.advised_steps, 0u);
    EXPECT_EQ(report.autonomous.advised_steps, 0u);
}

TEST(Experiment, ZeroProbabilityArmsCoincide) {
    ExperimentSpec spec = small_spec({6, 7}, 200);
    spec.teacher.advice_probability = 0.0;
    const auto report = run_experiment(spec);
    ASSERT_EQ(report.runs.size(), 4u);
    for (std::size_t i = 0; i < report.runs.size(); i += 2) {
        EXPECT_EQ(report.runs[i].episodes_to_first_optimal, report.runs[i + 1].episodes_to_first_optimal);
        EXPECT_EQ(report.runs[i].episodes_to_greedy_optimal, report.runs[i + 1].episodes_to_greedy_optimal);
    }
}

TEST(Experiment, DeterministicPerSeed) {
    const auto a = run_experiment(small_spec({8}));
    const auto b = run_experiment(small_spec({8}));
    std::ostringstream ca, cb;
    write_experiment_curves(ca, a);
    write_experiment_curves(cb, b);
    EXPECT_EQ(ca.str(), cb.str());
}

TEST(Experiment, CensoredAtCap) {
    ExperimentSpec spec = small_spec({9}, 1);
    spec.config.hyperparams.set_epsilon(1.0);
    const auto report = run_experiment(spec);
    const ArmRun& none = report.runs[0];
    if (none.censored) EXPECT_EQ(none.episodes_to_first_optimal, 1u);
    EXPECT_EQ(report.runs[1].episodes_to_first_optimal, 1u);
}

TEST(Experiment, GreedyMatchesOracleItself) {
    const MazeConfig c = default_config();
    const QTable oracle = value_iteration(c, 0.9, 1e-10);
    EXPECT_TRUE(greedy_matches(oracle, greedy_trace(oracle, c), c));
    EXPECT_FALSE(greedy_matches(make_qtable(c), greedy_trace(oracle, c), c));
}

TEST(Experiment, CsvAndSummaryFiles) {
    ExperimentSpec spec = small_spec({10, 11}, 50);
    const auto report = run_experiment(spec);
    const auto dir = std::filesystem::temp_directory_path() / "qhunt_exp_test";
    std::filesystem::create_directories(dir);
    save_experiment(dir / "exp.csv", spec, report);

    const std::string csv = jsonio::read_file(dir / "exp.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), kExperimentHeader);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    EXPECT_NE(csv.find("\n10,None,"), std::string::npos);
    EXPECT_NE(csv.find("\n11,OracleAdvice,"), std::string::npos);

    const std::string curves = jsonio::read_file(dir / "exp_curves.csv");
    EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 1 + 4 * 50);

    const json summary = json::parse(jsonio::read_file(dir / "exp_summary.json"));
    EXPECT_EQ(summary["seeds"], 2);
    EXPECT_EQ(summary["arms"][1]["arm"], "OracleAdvice");
}

} // namespace qhunt
