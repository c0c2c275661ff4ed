#pragma once

#include <stdexcept>
#include <string>

namespace tabcheck {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error("schema error: " + what) {}
};

class GridError : public Error {
public:
    explicit GridError(const std::string& what) : Error("grid error: " + what) {}
};

class UnknownMention : public Error {
public:
    explicit UnknownMention(const std::string& what) : Error("unknown mention: " + what) {}
};

class InfeasibleConfig : public Error {
public:
    explicit InfeasibleConfig(const std::string& what) : Error("infeasible config: " + what) {}
};

class ContextTooLong : public Error {
public:
    explicit ContextTooLong(const std::string& what) : Error("context too long: " + what) {}
};

class MentionNotLocated : public Error {
public:
    explicit MentionNotLocated(const std::string& what) : Error("mention not located: " + what) {}
};

class EmptyNonIsolated : public Error {
public:
    EmptyNonIsolated() : Error("non-isolated set needs at least two mentions") {}
};

class DimMismatch : public Error {
public:
    explicit DimMismatch(const std::string& what) : Error("dimension mismatch: " + what) {}
};

class EmptyList : public Error {
public:
    EmptyList() : Error("relevance score needs nonempty mention lists") {}
};

class TooLarge : public Error {
public:
    explicit TooLarge(const std::string& what) : Error("too large: " + what) {}
};

class PositionOutOfRange : public Error {
public:
    explicit PositionOutOfRange(const std::string& what) : Error("position out of range: " + what) {}
};

class BackendUnavailable : public Error {
public:
    explicit BackendUnavailable(const std::string& what) : Error("backend unavailable: " + what) {}
};

class DocMismatch : public Error {
public:
    explicit DocMismatch(const std::string& what) : Error("document mismatch: " + what) {}
};

/// Wraps a failure with the pipeline stage it came from.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace tabcheck
