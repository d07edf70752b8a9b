#include "qhunt/event_bus.hpp"

#include <thread>

#include <gtest/gtest.h>

namespace qhunt {

using namespace std::chrono_literals;

TEST(EventBus, SequenceNumbersAreGapless) {
    EventBus bus(7);
    auto sub = bus.subscribe();
    for (int i = 0; i < 5; ++i) bus.publish(EventKind::StepCompleted, {{"i", i}});
    const auto got = sub->drain();
    ASSERT_EQ(got.size(), 5u);
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].seq, 7 + i);
        EXPECT_EQ(got[i].payload["i"], i);
    }
    EXPECT_EQ(bus.next_seq(), 12u);
}

TEST(EventBus, EverySubscriberSeesEveryEvent) {
    EventBus bus;
    auto a = bus.subscribe();
    bus.publish(EventKind::ModeChanged, {});
    auto b = bus.subscribe();
    bus.publish(EventKind::EpsilonChanged, {});
    EXPECT_EQ(a->drain().size(), 2u);
    const auto late = b->drain();
    ASSERT_EQ(late.size(), 1u);
    EXPECT_EQ(late[0].seq, 2u);
}

TEST(EventBus, SlowSubscriberDroppedOthersUnaffected) {
    EventBus bus;
    auto slow = bus.subscribe(3);
    auto fast = bus.subscribe(100);
    for (int i = 0; i < 10; ++i) bus.publish(EventKind::PhaseChanged, {});
    EXPECT_EQ(slow->state(), Subscription::State::Dropped);
    EXPECT_EQ(slow->pop(0ms).state, Subscription::State::Dropped);
    EXPECT_EQ(fast->drain().size(), 10u);
    EXPECT_EQ(bus.subscriber_count(), 1u);
}

TEST(EventBus, PopTimesOutOpen) {
    EventBus bus;
    auto sub = bus.subscribe();
    const auto item = sub->pop(10ms);
    EXPECT_EQ(item.state, Subscription::State::Open);
    EXPECT_FALSE(item.event);
}

TEST(EventBus, PopWakesOnPublish) {
    EventBus bus;
    auto sub = bus.subscribe();
    std::jthread producer([&] {
        std::this_thread::sleep_for(20ms);
        bus.publish(EventKind::StepCompleted, {{"x", 1}});
    });
    const auto item = sub->pop(5s);
    ASSERT_TRUE(item.event);
    EXPECT_EQ(item.event->kind, EventKind::StepCompleted);
}

TEST(EventBus, CloseEndsSubscriptions) {
    auto bus = std::make_unique<EventBus>();
    auto sub = bus->subscribe();
    bus->publish(EventKind::PhaseChanged, {});
    bus.reset();
    // Queued events are still delivered before the terminal state.
    EXPECT_TRUE(sub->pop(0ms).event);
    EXPECT_EQ(sub->pop(0ms).state, Subscription::State::Closed);
}

TEST(EventJson, Shape) {
    const TrainingEvent e{4, EventKind::AwaitingInput, {{"kind", "Advice"}}};
    EXPECT_EQ(to_json(e), (nlohmann::json{{"seq", 4}, {"kind", "AwaitingInput"}, {"payload", {{"kind", "Advice"}}}}));
}

} // namespace qhunt
