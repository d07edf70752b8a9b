#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qhunt {

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A MazeConfig failed validation. Carries every violation found, not just the first.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out = "invalid maze config";
        for (const auto& p : items) {
            out += "; ";
            out += p;
        }
        return out;
    }

    std::vector<std::string> problems_;
};

class MaskedActionError : public Error {
public:
    MaskedActionError() : Error("masked action") {}
};

class TerminalStateError : public Error {
public:
    explicit TerminalStateError(const std::string& what = "no actions in terminal state")
        : Error(what) {}
};

/// Malformed document. `offset` is the byte position reported by the parser, if known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Well-formed JSON whose structure does not match the expected document.
class FormatError : public Error {
public:
    using Error::Error;
};

class SchemaVersionError : public Error {
public:
    SchemaVersionError(int found, int expected)
        : Error("schema_version mismatch: file has " + std::to_string(found) +
                ", this build reads " + std::to_string(expected)),
          found_(found), expected_(expected) {}

    int found() const noexcept { return found_; }
    int expected() const noexcept { return expected_; }

private:
    int found_;
    int expected_;
};

} // namespace qhunt
