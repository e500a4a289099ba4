#pragma once
// Error taxonomy shared by every module. All failures surface as exceptions
// rooted at mirage::Error so callers can catch the whole family at once.

#include <stdexcept>
#include <string>
#include <utility>

namespace mirage {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input data: graph files, scripts, model output grammars.
class ParseError : public Error {
public:
    using Error::Error;
};

// Lookup of an entity or key that does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

// Precondition violations on caller-supplied values.
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

// Malformed control-token blocks in model output.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Generation failures: exhausted scripts, HTTP errors, timeouts.
class BackendError : public Error {
public:
    using Error::Error;
};

// Request deadline exceeded (retries included).
class TimeoutError : public BackendError {
public:
    using BackendError::BackendError;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Single-assignment and other internal contract breaches.
class InvariantError : public Error {
public:
    using Error::Error;
};

// Bad command line or configuration; maps to exit code 2 in the CLI.
class UsageError : public Error {
public:
    using Error::Error;
};

// Wraps a failure with the pipeline stage it occurred in.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace mirage
