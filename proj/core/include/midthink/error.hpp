#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace midthink {

// Every failure surfaced by the library derives from Error. The CLI maps
// the category onto a process exit code.
enum class ErrorKind {
    config,      // bad configuration / unknown mode
    input,       // caller violated a precondition
    data,        // malformed dataset, dump or run directory contents
    transport,   // endpoint unreachable after retries
    protocol,    // endpoint answered with something we cannot parse
    capability,  // endpoint lacks a route we need
    tokenizer,   // tokenizer could not encode/decode
    io,          // filesystem
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};
struct InputError : Error {
    explicit InputError(const std::string& w) : Error(ErrorKind::input, w) {}
};
struct DataError : Error {
    explicit DataError(const std::string& w) : Error(ErrorKind::data, w) {}
};
struct TransportError : Error {
    explicit TransportError(const std::string& w) : Error(ErrorKind::transport, w) {}
};
struct CapabilityError : Error {
    explicit CapabilityError(const std::string& w) : Error(ErrorKind::capability, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

/// Server replied but the body was not what the wire protocol promises.
/// The raw body is kept for diagnostics.
class ProtocolError : public Error {
public:
    ProtocolError(const std::string& w, std::string body)
        : Error(ErrorKind::protocol, w), body_(std::move(body)) {}
    const std::string& body() const noexcept { return body_; }

private:
    std::string body_;
};

/// Malformed input file; `line` is 1-based, 0 when not line-specific.
class ParseError : public Error {
public:
    ParseError(const std::string& w, std::size_t line) : Error(ErrorKind::data, w), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class TokenizerError : public Error {
public:
    TokenizerError(const std::string& w, long token_index)
        : Error(ErrorKind::tokenizer, w), token_index_(token_index) {}
    long token_index() const noexcept { return token_index_; }

private:
    long token_index_;
};

/// Exit codes used by the command line tool: 0 success, 2 config error,
/// 3 transport exhaustion, 4 data error, 1 anything else.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace midthink
