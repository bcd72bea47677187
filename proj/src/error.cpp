#include "masszz/error.hpp"

namespace masszz {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::NotARepository: return "NotARepository";
    case ErrorKind::UnknownCommit: return "UnknownCommit";
    case ErrorKind::AmbiguousPrefix: return "AmbiguousPrefix";
    case ErrorKind::FileAbsent: return "FileAbsent";
    case ErrorKind::LineOutOfRange: return "LineOutOfRange";
    case ErrorKind::GitFailure: return "GitFailure";
    case ErrorKind::MalformedDiff: return "MalformedDiff";
    case ErrorKind::RootCommitFix: return "RootCommitFix";
    case ErrorKind::EmptyCandidates: return "EmptyCandidates";
    case ErrorKind::BackendError: return "BackendError";
    case ErrorKind::TranscriptExhausted: return "TranscriptExhausted";
    case ErrorKind::TranscriptMismatch: return "TranscriptMismatch";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::AgentOutputError: return "AgentOutputError";
    case ErrorKind::AnchorUnmappable: return "AnchorUnmappable";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace masszz
