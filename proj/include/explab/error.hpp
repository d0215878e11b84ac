#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace explab {

/// Operand dimensions disagree (matrix shapes, row counts, stale caches).
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value became NaN/Inf or an input contained one.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based, 0 when not line oriented.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace explab
