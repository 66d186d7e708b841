#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace farpoint {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidPose : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

// Timestamps went backwards (or stood still where strict increase is required).
class OrderingError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class SingularFit : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    DecodeError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// A frame carried a message type this protocol version does not know.
class UnknownMessageType : public Error {
public:
    UnknownMessageType(std::string tag, int version)
        : Error("protocol v" + std::to_string(version) + " rejects unknown message type '" + tag + "'"),
          tag_(std::move(tag)), version_(version) {}

    const std::string& tag() const noexcept { return tag_; }
    int version() const noexcept { return version_; }

private:
    std::string tag_;
    int version_;
};

class ReplayError : public Error {
public:
    ReplayError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ScenarioError : public Error {
public:
    using Error::Error;
};

// Socket, handshake or connection failure.
class NetworkError : public Error {
public:
    using Error::Error;
};

} // namespace farpoint
