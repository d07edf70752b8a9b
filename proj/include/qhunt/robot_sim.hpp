#pragma once

// Kinematic stand-in for the physical robot: one cell per MOVE, heading
// drift after every move, and an IMU correction that snaps the heading
// back onto its commanded cardinal.

#include <cmath>
#include <mutex>
#include <optional>
#include <utility>

#include "qhunt/bridge_protocol.hpp"
#include "qhunt/grid.hpp"
#include "qhunt/rng.hpp"

namespace qhunt::bridge {

/// 0 = Up (towards row 0), clockwise.
constexpr int cardinal_heading(Action a) {
    switch (a) {
    case Action::Up: return 0;
    case Action::Right: return 90;
    case Action::Down: return 180;
    case Action::Left: return 270;
    }
    return 0;
}

inline double normalize_heading(double deg) {
    double h = std::fmod(deg, 360.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    return h;
}

/// Signed circular difference a - b in (-180, 180].
inline double heading_difference(double a, double b) {
    double d = std::fmod(a - b, 360.0);
    if (d <= -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    return d;
}

inline double heading_error(const Pose& p) { return heading_difference(p.heading_deg, p.ideal_heading_deg); }

/// Per-move heading perturbation: magnitude uniform on [min_deg, max_deg],
/// with a sign fixed per robot (drawn once from the seed).
class DriftModel {
public:
    explicit DriftModel(std::uint64_t seed, double min_deg = 1.0, double max_deg = 2.0)
        : min_deg_(min_deg), max_deg_(max_deg), rng_(seed) {
        sign_ = rng_.uniform01() < 0.5 ? -1 : 1;
    }

    double min_deg() const { return min_deg_; }
    double max_deg() const { return max_deg_; }
    int sign() const { return sign_; }

    double draw() { return sign_ * (min_deg_ + (max_deg_ - min_deg_) * rng_.uniform_closed()); }

private:
    double min_deg_;
    double max_deg_;
    int sign_ = 1;
    Rng rng_;
};

struct SimOptions {
    bool correction = true;
    double correction_tolerance_deg = 0.5;
};

/// Apply one command to a pose. `geometry` supplies bounds and walls.
inline std::pair<Pose, Reply> execute(const Command& cmd, const Pose& pose, DriftModel& drift,
                                      const MazeConfig& geometry, const SimOptions& opts = {}) {
    if (const auto* reset = std::get_if<Reset>(&cmd)) {
        if (!geometry.in_bounds(reset->cell)) {
            return {pose, Reply{Status::Err, pose, "reset cell " + to_string(reset->cell) + " out of bounds"}};
        }
        Pose p{reset->cell, static_cast<double>(reset->heading), static_cast<double>(reset->heading)};
        return {p, Reply{Status::Ok, p, "reset"}};
    }
    if (std::holds_alternative<PoseQuery>(cmd)) {
        return {pose, Reply{Status::Ok, pose, "pose"}};
    }

    const Action dir = std::get<Move>(cmd).direction;
    Pose p = pose;
    // Turn by the commanded relative angle; any existing error is carried along.
    const double target = cardinal_heading(dir);
    p.heading_deg = normalize_heading(p.heading_deg + heading_difference(target, p.ideal_heading_deg));
    p.ideal_heading_deg = target;

    const GridPos next = moved(p.cell, dir);
    const bool blocked = !geometry.in_bounds(next) || geometry.blocked(p.cell, next);
    if (!blocked) p.cell = next;

    p.heading_deg = normalize_heading(p.heading_deg + drift.draw());
    if (opts.correction && std::abs(heading_error(p)) > opts.correction_tolerance_deg)
        p.heading_deg = p.ideal_heading_deg;

    return {p, Reply{Status::Ok, p, blocked ? "blocked" : "moved"}};
}

/// Stateful simulated robot. Not thread-safe; callers serialize.
class RobotSimulator {
public:
    RobotSimulator(MazeConfig geometry, std::uint64_t drift_seed, SimOptions opts = {})
        : geometry_(std::move(geometry)), drift_(drift_seed), opts_(opts) {
        pose_ = Pose{geometry_.start, 0.0, 0.0};
    }

    Reply execute(const Command& cmd) {
        auto [p, reply] = bridge::execute(cmd, pose_, drift_, geometry_, opts_);
        pose_ = p;
        return reply;
    }

    const Pose& pose() const { return pose_; }
    const MazeConfig& geometry() const { return geometry_; }
    const DriftModel& drift() const { return drift_; }

private:
    MazeConfig geometry_;
    DriftModel drift_;
    SimOptions opts_;
    Pose pose_;
};

/// In-process link that round-trips every command through the line codec.
class LocalLink : public Link {
public:
    explicit LocalLink(RobotSimulator sim) : sim_(std::move(sim)) {}

    std::optional<Reply> send(const Command& cmd) override {
        std::lock_guard lock(mu_);
        return sim_.execute(decode(encode(cmd)));
    }

    Pose pose() const {
        std::lock_guard lock(mu_);
        return sim_.pose();
    }

private:
    mutable std::mutex mu_;
    RobotSimulator sim_;
};

} // namespace qhunt::bridge
