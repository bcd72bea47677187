#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace masszz {

enum class ErrorKind {
    NotARepository,
    UnknownCommit,
    AmbiguousPrefix,
    FileAbsent,
    LineOutOfRange,
    GitFailure,
    MalformedDiff,
    RootCommitFix,
    EmptyCandidates,
    BackendError,
    TranscriptExhausted,
    TranscriptMismatch,
    SchemaViolation,
    AgentOutputError,
    AnchorUnmappable,
    PreconditionViolation,
    SchemaError,
    InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base exception for every failure surfaced by the library. The kind is
/// stable and is what callers (and the CLI exit-code mapping) switch on.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Parse failure in a unified diff; `line()` is 1-based within the input.
class MalformedDiff : public Error {
public:
    MalformedDiff(std::size_t line, const std::string& what)
        : Error(ErrorKind::MalformedDiff, "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// An agent response that does not fit the expected output shape. The raw
/// completion text is kept so callers can log it or retry.
class SchemaViolation : public Error {
public:
    SchemaViolation(const std::string& what, std::string raw)
        : Error(ErrorKind::SchemaViolation, what), raw_(std::move(raw)) {}

    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

/// Dataset record that fails validation; `line()` is the 1-based JSON-lines row.
class SchemaError : public Error {
public:
    SchemaError(std::size_t line, const std::string& what)
        : Error(ErrorKind::SchemaError, "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace masszz
