#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qu {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input rejected at a boundary (maps to a 400-class response).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration: taxonomy file, mock script, settings.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class BackendErrorKind { Timeout, Transport, Protocol, Malformed };

const char* to_string(BackendErrorKind kind);

/// Failure talking to, or interpreting, the LLM backend.
class BackendError : public Error {
public:
    BackendError(BackendErrorKind kind, const std::string& what)
        : Error(what), kind_(kind) {}

    BackendErrorKind kind() const noexcept { return kind_; }

private:
    BackendErrorKind kind_;
};

class BackendTimeout : public BackendError {
public:
    explicit BackendTimeout(const std::string& what)
        : BackendError(BackendErrorKind::Timeout, what) {}
};

class TransportError : public BackendError {
public:
    explicit TransportError(const std::string& what)
        : BackendError(BackendErrorKind::Transport, what) {}
};

class ProtocolError : public BackendError {
public:
    explicit ProtocolError(const std::string& what)
        : BackendError(BackendErrorKind::Protocol, what) {}
};

/// Backend answered, but its output could not be interpreted (unknown route, bad slots, parse error).
class BackendMalformed : public BackendError {
public:
    explicit BackendMalformed(const std::string& what)
        : BackendError(BackendErrorKind::Malformed, what) {}
};

/// Request budget exhausted with nothing to degrade to (maps to a 504-class response).
class BudgetExhausted : public Error {
public:
    using Error::Error;
};

class DatasetFormatError : public Error {
public:
    DatasetFormatError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class NoSamples : public Error {
public:
    using Error::Error;
};

}  // namespace qu
