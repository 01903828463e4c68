#pragma once
#include <stdexcept>
#include <string>

namespace safegrid {

// Invalid user-facing configuration (bad tolerances, empty ranges, ...).
class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// A bound needs a regularity modulus the loss does not provide,
// e.g. bilateral steps on a loss that is not uniformly convex.
class ModulusUnavailable : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error
{
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what)
        , line_(line)
    {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DimensionMismatch : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class LabelDomain : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace safegrid
