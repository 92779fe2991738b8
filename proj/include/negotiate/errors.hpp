#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace negotiate {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- labels -----------------------------------------------------------------

class LabelError : public Error {
public:
    using Error::Error;
};

/// The text denotes no label of the space.
class NoMatchError : public LabelError {
public:
    using LabelError::LabelError;
};

/// The text mentions more than one label of the space.
class AmbiguousLabelError : public LabelError {
public:
    using LabelError::LabelError;
};

/// A domain value violated one of its construction invariants.
class InvariantError : public Error {
public:
    using Error::Error;
};

// ---- backends ---------------------------------------------------------------

/// Failures attributable to the completion transport rather than the model's
/// output. Evaluation excludes these from the accuracy denominator.
class BackendError : public Error {
public:
    using Error::Error;
};

class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

class AuthError : public BackendError {
public:
    using BackendError::BackendError;
};

class RateLimitedError : public BackendError {
public:
    using BackendError::BackendError;
};

class ScriptExhaustedError : public BackendError {
public:
    using BackendError::BackendError;
};

class CacheCorruptError : public BackendError {
public:
    using BackendError::BackendError;
};

// ---- retrieval --------------------------------------------------------------

class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

// ---- model output -----------------------------------------------------------

/// The model produced text that does not follow the response grammar.
class ResponseFormatError : public Error {
public:
    using Error::Error;
};

class NoDecisionError : public ResponseFormatError {
public:
    using ResponseFormatError::ResponseFormatError;
};

class NoAttitudeError : public ResponseFormatError {
public:
    using ResponseFormatError::ResponseFormatError;
};

class MalformedReasoningError : public ResponseFormatError {
public:
    using ResponseFormatError::ResponseFormatError;
};

class MalformedExplanationError : public ResponseFormatError {
public:
    using ResponseFormatError::ResponseFormatError;
};

class InvalidDemoError : public Error {
public:
    using Error::Error;
};

// ---- configuration / io -----------------------------------------------------

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Pipeline mode given the wrong number of agents.
class ModeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// A malformed line in a JSONL stream; `line` is 1-based.
class JsonlError : public Error {
public:
    JsonlError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace negotiate
