#pragma once

// Multi-subscriber fan-out of training events. Publishing never blocks:
// a subscriber whose queue reaches its capacity is dropped and sees a
// terminal notice instead of further events.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "qhunt/events.hpp"

namespace qhunt {

inline constexpr std::size_t kSubscriberBufferEvents = 1024;

class Subscription {
public:
    enum class State { Open, Dropped, Closed };

    struct Item {
        State state = State::Open;
        std::optional<TrainingEvent> event; ///< set when state == Open
    };

    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    /// Wait up to `timeout` for the next event. An empty Open item means timeout.
    Item pop(std::chrono::milliseconds timeout) {
        std::unique_lock lock(mu_);
        cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || state_ != State::Open; });
        if (!queue_.empty()) {
            Item item{State::Open, std::move(queue_.front())};
            queue_.pop_front();
            return item;
        }
        return {state_, std::nullopt};
    }

    /// Everything queued right now, without waiting.
    std::vector<TrainingEvent> drain() {
        std::lock_guard lock(mu_);
        std::vector<TrainingEvent> out(std::make_move_iterator(queue_.begin()),
                                       std::make_move_iterator(queue_.end()));
        queue_.clear();
        return out;
    }

    State state() const {
        std::lock_guard lock(mu_);
        return state_;
    }

    void close() {
        {
            std::lock_guard lock(mu_);
            if (state_ == State::Open) state_ = State::Closed;
        }
        cv_.notify_all();
    }

private:
    friend class EventBus;

    // Returns false once the subscriber has been dropped.
    bool push(const TrainingEvent& e) {
        bool open = true;
        {
            std::lock_guard lock(mu_);
            if (state_ != State::Open) return false;
            if (queue_.size() >= capacity_) {
                queue_.clear();
                state_ = State::Dropped;
                open = false;
            } else {
                queue_.push_back(e);
            }
        }
        cv_.notify_all();
        return open;
    }

    std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<TrainingEvent> queue_;
    State state_ = State::Open;
};

class EventBus {
public:
    explicit EventBus(std::uint64_t first_seq = 1) : next_seq_(first_seq) {}

    ~EventBus() { close_all(); }

    std::shared_ptr<Subscription> subscribe(std::size_t capacity = kSubscriberBufferEvents) {
        auto sub = std::make_shared<Subscription>(capacity);
        std::lock_guard lock(mu_);
        subscribers_.push_back(sub);
        return sub;
    }

    /// Stamp the next sequence number and deliver to every live subscriber.
    TrainingEvent publish(EventKind kind, nlohmann::json payload) {
        std::lock_guard lock(mu_);
        TrainingEvent e{next_seq_++, kind, std::move(payload)};
        std::erase_if(subscribers_, [&](const std::shared_ptr<Subscription>& s) { return !s->push(e); });
        return e;
    }

    std::uint64_t next_seq() const {
        std::lock_guard lock(mu_);
        return next_seq_;
    }

    std::size_t subscriber_count() const {
        std::lock_guard lock(mu_);
        return subscribers_.size();
    }

    void close_all() {
        std::lock_guard lock(mu_);
        for (auto& s : subscribers_) s->close();
        subscribers_.clear();
    }

private:
    mutable std::mutex mu_;
    std::uint64_t next_seq_;
    std::vector<std::shared_ptr<Subscription>> subscribers_;
};

} // namespace qhunt
