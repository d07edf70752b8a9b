#include "qhunt/export.hpp"
#include "qhunt/json_io.hpp"
#include "qhunt/value_iteration.hpp"

#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

namespace qhunt {
namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("qhunt_json_" + name);
}

} // namespace

TEST(ConfigJson, ShippedDefaultMatchesBuiltIn) {
    const TrainingConfig tc = load_training_config(std::string(QHUNT_SOURCE_DIR) + "/configs/default.json");
    EXPECT_EQ(tc.maze, default_config());
    EXPECT_EQ(tc.hyperparams, Hyperparams{});
}

TEST(ConfigJson, RoundTrip) {
    TrainingConfig tc;
    tc.maze.width = 4;
    tc.maze.exit = {2, 3};
    tc.maze.rewards.step = -0.5;
    tc.hyperparams.set_epsilon(0.1);
    const TrainingConfig back = training_config_from_json(json::parse(to_json(tc).dump()));
    EXPECT_EQ(back.maze, tc.maze);
    EXPECT_EQ(back.hyperparams, tc.hyperparams);
}

TEST(ConfigJson, UnknownFieldRejected) {
    json j = to_json(default_config());
    j["colour"] = "red";
    EXPECT_THROW(training_config_from_json(j), FormatError);
    json k = to_json(default_config());
    k["rewards"]["bonus"] = 1;
    EXPECT_THROW(training_config_from_json(k), FormatError);
}

TEST(ConfigJson, SchemaMismatchNamesVersions) {
    json j = to_json(default_config());
    j["schema_version"] = 2;
    try {
        training_config_from_json(j);
        FAIL();
    } catch (const SchemaVersionError& e) {
        EXPECT_EQ(e.found(), 2);
        EXPECT_EQ(e.expected(), 1);
        EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
    }
}

TEST(ConfigJson, CorruptFileReportsByteOffset) {
    const auto path = temp_path("corrupt.json");
    jsonio::write_file(path, "{\"schema_version\": 1, \"width\": }");
    try {
        load_training_config(path);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 32u);
    }
}

TEST(ConfigJson, InvalidLayoutRejectedOnLoad) {
    const auto path = temp_path("sealed.json");
    MazeConfig c = default_config();
    c.walls.emplace_back(GridPos{2, 1}, GridPos{2, 2});
    c.walls.emplace_back(GridPos{1, 2}, GridPos{2, 2});
    jsonio::write_file(path, to_json(c).dump());
    EXPECT_THROW(load_training_config(path), ConfigError);
}

TEST(ConfigJson, DigestTracksContent) {
    MazeConfig c = default_config();
    const auto d = config_digest(c);
    EXPECT_EQ(d.size(), 16u);
    EXPECT_EQ(d, config_digest(default_config()));
    c.rewards.wall = -11;
    EXPECT_NE(d, config_digest(c));
}

TEST(StepRecordJson, RoundTrip) {
    StepRecord r;
    r.s = 5;
    r.a = Action::Left;
    r.r = -0.1;
    r.s_next = 4;
    r.reward_source = RewardSource::HumanOverride;
    r.action_source = ActionSource::Advised;
    r.event = StepEvent::WallHit;
    EXPECT_EQ(step_record_from_json(json::parse(to_json(r).dump())), r);
    EXPECT_THROW(step_record_from_json(json::array({1, 2})), FormatError);
}

TEST(QTableExport, RoundTripThroughFile) {
    const MazeConfig c = default_config();
    QTableExport e{config_digest(c), value_iteration(c, 0.9, 1e-10), make_visit_counts(c), Hyperparams{}, 77};
    e.visits(3, Action::Down) = 12;
    const auto path = temp_path("qtable.json");
    save_qtable_export(path, e);
    EXPECT_EQ(load_qtable_export(path), e);
}

TEST(QTableExport, DimensionMismatchRejected) {
    const MazeConfig c = default_config();
    json j = to_json(QTableExport{config_digest(c), make_qtable(c), make_visit_counts(c), Hyperparams{}, 0});
    j["num_states"] = 20;
    EXPECT_THROW(qtable_export_from_json(j), FormatError);
}

TEST(LearningCurve, SkipsAbortedEpisodes) {
    const MazeConfig c = default_config();
    StepRecord a;
    a.s = 0;
    a.a = Action::Down;
    a.r = -1;
    a.s_next = 3;
    StepRecord b = a;
    b.s = 16;
    b.a = Action::Right;
    b.r = 30;
    b.s_next = 17;
    b.done = true;
    b.event = StepEvent::ExitReached;
    b.action_source = ActionSource::Advised;
    const auto done = make_episode_log(1, {a, b}, c);
    const auto aborted = make_episode_log(2, {a}, c, true);
    std::ostringstream os;
    write_learning_curve(os, {done, aborted});
    EXPECT_EQ(os.str(), std::string(kLearningCurveHeader) + "\n1,29,2,1,Exit,1,0\n");
}

} // namespace qhunt
