#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scplus {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DuplicateRecordError : public Error {
public:
    using Error::Error;
};

class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration (bad keys, variant/spec mismatch).
class ConfigError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// A non-finite value showed up while training; `group()` names the parameter group.
class NumericError : public Error {
public:
    NumericError(std::string group, const std::string& what)
        : Error(what + " (group: " + group + ")"), group_(std::move(group)) {}

    [[nodiscard]] const std::string& group() const noexcept { return group_; }

private:
    std::string group_;
};

}  // namespace scplus
