#pragma once

// Line protocol spoken between the trainer and the robot relay.
//
//   MOVE <U|D|L|R>
//   RESET <row> <col> <heading>     heading in {0, 90, 180, 270}
//   POSE
//
// One ASCII command per newline-terminated line, tokens separated by a
// single space, at most 128 bytes including the newline.

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "qhunt/error.hpp"
#include "qhunt/grid.hpp"

namespace qhunt::bridge {

inline constexpr std::size_t kMaxLineBytes = 128;

class DecodeError : public Error {
public:
    using Error::Error;
};

struct Move {
    Action direction = Action::Up;
    bool operator==(const Move&) const = default;
};

struct Reset {
    GridPos cell;
    int heading = 0;
    bool operator==(const Reset&) const = default;
};

struct PoseQuery {
    bool operator==(const PoseQuery&) const = default;
};

using Command = std::variant<Move, Reset, PoseQuery>;

inline bool is_cardinal(int heading) {
    return heading == 0 || heading == 90 || heading == 180 || heading == 270;
}

inline std::string encode(const Command& cmd) {
    struct Visitor {
        std::string operator()(const Move& m) const { return std::string("MOVE ") + to_letter(m.direction) + "\n"; }
        std::string operator()(const Reset& r) const {
            return "RESET " + std::to_string(r.cell.row) + " " + std::to_string(r.cell.col) + " " +
                   std::to_string(r.heading) + "\n";
        }
        std::string operator()(const PoseQuery&) const { return "POSE\n"; }
    };
    return std::visit(Visitor{}, cmd);
}

namespace detail {

inline int parse_int(std::string_view token) {
    int value = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || token.empty())
        throw DecodeError("bad integer " + std::string(token));
    return value;
}

} // namespace detail

/// Parse one line. A single trailing "\n" (optionally preceded by "\r") is accepted.
inline Command decode(std::string_view line) {
    if (line.size() > kMaxLineBytes) throw DecodeError("line exceeds 128 bytes");
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    for (unsigned char ch : line) {
        if (ch == '\n' || ch == '\r') throw DecodeError("more than one line in frame");
        if (ch < 0x20 || ch > 0x7e) throw DecodeError("non-printable or non-ASCII byte in frame");
    }
    if (line.empty()) throw DecodeError("empty frame");

    std::vector<std::string_view> tokens;
    std::size_t begin = 0;
    while (true) {
        const std::size_t sp = line.find(' ', begin);
        const auto token = line.substr(begin, sp == std::string_view::npos ? std::string_view::npos : sp - begin);
        if (token.empty()) throw DecodeError("empty token (stray space)");
        tokens.push_back(token);
        if (sp == std::string_view::npos) break;
        begin = sp + 1;
    }

    const std::string_view verb = tokens[0];
    const std::size_t args = tokens.size() - 1;
    auto arity = [&](std::size_t expected) {
        if (args != expected)
            throw DecodeError(std::string(verb) + " expects " + std::to_string(expected) +
                              " argument(s), got " + std::to_string(args));
    };
    if (verb == "MOVE") {
        arity(1);
        auto dir = action_from_letter(tokens[1]);
        if (!dir) throw DecodeError("bad direction " + std::string(tokens[1]));
        return Move{*dir};
    }
    if (verb == "RESET") {
        arity(3);
        Reset r{{detail::parse_int(tokens[1]), detail::parse_int(tokens[2])}, detail::parse_int(tokens[3])};
        if (!is_cardinal(r.heading)) throw DecodeError("bad heading " + std::string(tokens[3]));
        return r;
    }
    if (verb == "POSE") {
        arity(0);
        return PoseQuery{};
    }
    throw DecodeError("unknown verb " + std::string(verb));
}

struct Pose {
    GridPos cell;
    double heading_deg = 0.0;       ///< actual heading in [0, 360)
    double ideal_heading_deg = 0.0; ///< commanded cardinal heading

    bool operator==(const Pose&) const = default;
};

enum class Status { Ok, Err };

struct Reply {
    Status status = Status::Ok;
    Pose pose;
    std::string message;

    bool operator==(const Reply&) const = default;
};

/// Wire form of a pose: {row, col, heading_deg}.
inline nlohmann::json to_json(const Pose& p) {
    return {{"row", p.cell.row}, {"col", p.cell.col}, {"heading_deg", p.heading_deg}};
}

inline nlohmann::json to_json(const Reply& r) {
    return {{"status", r.status == Status::Ok ? "OK" : "ERR"}, {"pose", to_json(r.pose)}, {"message", r.message}};
}

inline Pose pose_from_json(const nlohmann::json& j) {
    try {
        Pose p;
        p.cell = {j.at("row").get<int>(), j.at("col").get<int>()};
        p.heading_deg = j.at("heading_deg").get<double>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("pose: ") + e.what());
    }
}

inline Reply reply_from_json(const nlohmann::json& j) {
    try {
        Reply r;
        const auto status = j.at("status").get<std::string>();
        if (status != "OK" && status != "ERR") throw FormatError("reply: bad status " + status);
        r.status = status == "OK" ? Status::Ok : Status::Err;
        r.pose = pose_from_json(j.at("pose"));
        r.message = j.at("message").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("reply: ") + e.what());
    }
}

/// Anything that can carry a command to a robot and bring back its reply.
/// nullopt means the robot could not be reached in time.
class Link {
public:
    virtual ~Link() = default;
    virtual std::optional<Reply> send(const Command& cmd) = 0;
};

} // namespace qhunt::bridge
