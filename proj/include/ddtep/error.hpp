#pragma once

#include <stdexcept>
#include <string>

namespace ddtep {

struct Loc {
    int line = 0;
    int col = 0;
    bool valid() const { return line > 0; }
};

enum class ErrorKind {
    Lex,       // unrecognized input character
    Parse,     // malformed statement
    Semantic,  // head-role conflict, arity clash, range restriction, stratification, ...
    Resource,  // world/strategy/node cap exceeded
    Evidence,  // impossible or decision-dependent evidence
    Usage,     // bad CLI invocation
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, Loc loc = {})
        : std::runtime_error(format(message, loc)), kind_(kind), loc_(loc) {}

    ErrorKind kind() const { return kind_; }
    Loc loc() const { return loc_; }

private:
    static std::string format(const std::string& message, Loc loc) {
        if (!loc.valid()) return message;
        return std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + message;
    }

    ErrorKind kind_;
    Loc loc_;
};

} // namespace ddtep
