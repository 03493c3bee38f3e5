#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace fungen {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    using Error::Error;
};

/// A generating function was evaluated outside its domain.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what, std::optional<std::size_t> day = std::nullopt)
        : Error(day ? "day " + std::to_string(*day) + ": " + what : what), day_(day) {}
    std::optional<std::size_t> day() const noexcept { return day_; }

private:
    std::optional<std::size_t> day_;
};

/// Raised by the backtest loop when a strategy cannot be formed.
class StrategyError : public Error {
public:
    StrategyError(const std::string& what, std::size_t day)
        : Error("day " + std::to_string(day) + ": " + what), day_(day) {}
    std::size_t day() const noexcept { return day_; }

private:
    std::size_t day_;
};

}  // namespace fungen
