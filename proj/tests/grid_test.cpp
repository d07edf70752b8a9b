#include "qhunt/grid.hpp"

#include <algorithm>
#include <set>
#include <string>

#include <gtest/gtest.h>

namespace qhunt {
namespace {

EnvState at(int r, int c, bool flag = false) { return EnvState{{r, c}, flag, 0, false}; }

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
    return std::any_of(problems.begin(), problems.end(),
                       [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

} // namespace

TEST(LegalActions, CornerOnlyDownOrRight) {
    ActionList expected;
    expected.push_back(Action::Down);
    expected.push_back(Action::Right);
    EXPECT_EQ(legal_actions(at(0, 0), default_config()), expected);
}

TEST(LegalActions, InteriorHasAllFour) {
    const auto legal = legal_actions(at(1, 1), default_config());
    ASSERT_EQ(legal.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(legal[i], kAllActions[i]);
}

TEST(LegalActions, WallsDoNotMask) {
    EXPECT_TRUE(legal_actions(at(1, 1), default_config()).contains(Action::Right));
}

TEST(LegalActions, TerminalStateRejected) {
    EnvState s = at(2, 2);
    s.done = true;
    try {
        legal_actions(s, default_config());
        FAIL();
    } catch (const TerminalStateError& e) {
        EXPECT_STREQ(e.what(), "no actions in terminal state");
    }
}

TEST(LegalActions, EveryNonTerminalStateHasInBoundsActions) {
    const MazeConfig c = default_config();
    for (std::size_t i = 0; i < c.num_states(); ++i) {
        const EnvState s = state_from_index(i, c);
        if (s.done) continue;
        const auto legal = legal_actions(s, c);
        ASSERT_FALSE(legal.empty());
        for (Action a : legal) EXPECT_TRUE(c.in_bounds(moved(s.pos, a)));
    }
}

TEST(Step, PlainMoveCostsOne) {
    const auto out = step(at(0, 0), Action::Right, default_config());
    EXPECT_EQ(out.reward, -1.0);
    EXPECT_EQ(out.next.pos, (GridPos{0, 1}));
    EXPECT_EQ(out.event, StepEvent::Step);
}

TEST(Step, WallHitStaysPut) {
    const auto out = step(at(0, 1), Action::Down, default_config());
    EXPECT_EQ(out.reward, -10.0);
    EXPECT_EQ(out.next.pos, (GridPos{0, 1}));
    EXPECT_EQ(out.event, StepEvent::WallHit);
    EXPECT_EQ(out.next.steps_taken, 1);
}

TEST(Step, WallIsUndirected) {
    const MazeConfig c = default_config();
    EXPECT_EQ(step(at(1, 1), Action::Up, c).event, StepEvent::WallHit);
    EXPECT_EQ(step(at(1, 2), Action::Left, c).event, StepEvent::WallHit);
    EXPECT_EQ(step(at(1, 1), Action::Right, c).event, StepEvent::WallHit);
}

TEST(Step, ExitEndsEpisode) {
    const auto out = step(at(2, 1, true), Action::Right, default_config());
    EXPECT_EQ(out.reward, 30.0);
    EXPECT_TRUE(out.next.done);
    EXPECT_EQ(out.event, StepEvent::ExitReached);
}

TEST(Step, ExitWithoutTreasureStillEnds) {
    const auto out = step(at(1, 2), Action::Down, default_config());
    EXPECT_EQ(out.event, StepEvent::ExitReached);
    EXPECT_TRUE(out.next.done);
    EXPECT_FALSE(out.next.treasure_collected);
}

TEST(Step, TreasureOncePerEpisode) {
    const MazeConfig c = default_config();
    const auto first = step(at(1, 0), Action::Down, c);
    EXPECT_EQ(first.reward, 20.0);
    EXPECT_EQ(first.event, StepEvent::TreasureFound);
    EXPECT_TRUE(first.next.treasure_collected);

    const auto away = step(first.next, Action::Up, c);
    const auto again = step(away.next, Action::Down, c);
    EXPECT_EQ(again.reward, -1.0);
    EXPECT_EQ(again.event, StepEvent::Step);
    EXPECT_TRUE(again.next.treasure_collected);
}

TEST(Step, MaskedActionRejected) {
    try {
        step(at(0, 0), Action::Up, default_config());
        FAIL();
    } catch (const MaskedActionError& e) {
        EXPECT_STREQ(e.what(), "masked action");
    }
}

TEST(Step, TerminalStateRejected) {
    EnvState s = at(2, 2);
    s.done = true;
    EXPECT_THROW(step(s, Action::Up, default_config()), TerminalStateError);
}

TEST(Step, TimeoutKeepsReward) {
    MazeConfig c = default_config();
    c.max_steps_per_episode = 1;
    const auto out = step(reset(c), Action::Right, c);
    EXPECT_TRUE(out.next.done);
    EXPECT_EQ(out.event, StepEvent::Timeout);
    EXPECT_EQ(out.reward, -1.0);
}

TEST(Step, ExitOnLastAllowedStepIsExit) {
    MazeConfig c = default_config();
    c.max_steps_per_episode = 1;
    EnvState s = at(2, 1, true);
    const auto out = step(s, Action::Right, c);
    EXPECT_EQ(out.event, StepEvent::ExitReached);
}

TEST(Step, RewardsAreExclusiveAndMovesAreUnit) {
    const MazeConfig c = default_config();
    const std::set<double> allowed{20.0, 30.0, -10.0, -1.0};
    for (std::size_t i = 0; i < c.num_states(); ++i) {
        const EnvState s = state_from_index(i, c);
        if (s.done) continue;
        for (Action a : legal_actions(s, c)) {
            const auto out = step(s, a, c);
            EXPECT_TRUE(allowed.count(out.reward));
            const int dist = std::abs(out.next.pos.row - s.pos.row) + std::abs(out.next.pos.col - s.pos.col);
            EXPECT_EQ(dist, out.event == StepEvent::WallHit ? 0 : 1);
            EXPECT_GE(out.next.treasure_collected, s.treasure_collected);
        }
    }
}

TEST(Reset, StartsAtStartWithoutTreasure) {
    MazeConfig c = default_config();
    const MazeConfig before = c;
    const EnvState s = reset(c);
    EXPECT_EQ(s.pos, c.start);
    EXPECT_FALSE(s.treasure_collected);
    EXPECT_EQ(s.steps_taken, 0);
    EXPECT_FALSE(s.done);
    EXPECT_EQ(c, before);
}

TEST(Reset, AfterTerminalMatchesFirstReset) {
    const MazeConfig c = default_config();
    const EnvState first = reset(c);
    const auto out = step(EnvState{{2, 1}, true, 3, false}, Action::Right, c);
    ASSERT_TRUE(out.next.done);
    EXPECT_EQ(reset(c), first);
}

TEST(StateIndex, FormulaAndBijection) {
    const MazeConfig c = default_config();
    EXPECT_EQ(state_index(at(0, 0), c), 0u);
    EXPECT_EQ(state_index(at(2, 2, true), c), 17u);
    EXPECT_EQ(state_index(at(1, 2, false), c), 5u);
    for (std::size_t i = 0; i < c.num_states(); ++i) EXPECT_EQ(state_index(state_from_index(i, c), c), i);
}

TEST(StateIndex, NonSquareGrid) {
    MazeConfig c;
    c.width = 4;
    c.height = 2;
    EXPECT_EQ(state_index(EnvState{{1, 3}, true, 0, false}, c), 8u + 7u);
}

TEST(WallEdge, NormalizesOrder) {
    EXPECT_EQ(WallEdge({1, 1}, {0, 1}), WallEdge({0, 1}, {1, 1}));
    EXPECT_EQ(WallEdge({1, 1}, {0, 1}).a(), (GridPos{0, 1}));
    EXPECT_FALSE(WallEdge({0, 0}, {1, 1}).adjacent());
}

TEST(Validate, DefaultLayoutIsValid) { EXPECT_TRUE(validate_config(default_config()).empty()); }

TEST(Validate, SpecialCellsMustBeDistinct) {
    MazeConfig c = default_config();
    c.treasure = c.exit;
    EXPECT_TRUE(mentions(validate_config(c), "special cells must be distinct"));
}

TEST(Validate, SealedExitIsUnreachable) {
    MazeConfig c = default_config();
    c.walls.push_back(WallEdge({2, 1}, {2, 2}));
    c.walls.push_back(WallEdge({1, 2}, {2, 2}));
    const auto problems = validate_config(c);
    EXPECT_TRUE(mentions(problems, "exit unreachable"));
}

TEST(Validate, ReportsEveryProblem) {
    MazeConfig c = default_config();
    c.start = {5, 5};
    c.walls.push_back(WallEdge({0, 0}, {1, 1}));
    c.walls.push_back(WallEdge({2, 2}, {2, 3}));
    c.walls.push_back(WallEdge({1, 1}, {0, 1}));
    c.max_steps_per_episode = 0;
    const auto problems = validate_config(c);
    EXPECT_GE(problems.size(), 4u);
    EXPECT_TRUE(mentions(problems, "out of bounds"));
    EXPECT_TRUE(mentions(problems, "non-adjacent"));
    EXPECT_TRUE(mentions(problems, "dangling"));
    EXPECT_TRUE(mentions(problems, "duplicate"));
    EXPECT_THROW(require_valid(c), ConfigError);
}

TEST(Validate, NotHardCodedToThreeByThree) {
    MazeConfig c;
    c.width = 5;
    c.height = 4;
    c.start = {0, 0};
    c.treasure = {3, 0};
    c.exit = {3, 4};
    EXPECT_TRUE(validate_config(c).empty());
}

} // namespace qhunt
