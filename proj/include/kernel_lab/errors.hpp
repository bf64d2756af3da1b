#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kernel_lab {

enum class ErrorKind { Input, Numeric, Resource, Format, Io, Config };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

class ResourceError : public Error {
public:
    ResourceError(const std::string& what, std::uint64_t required_bytes)
        : Error(ErrorKind::Resource, what), required_bytes_(required_bytes) {}
    std::uint64_t required_bytes() const noexcept { return required_bytes_; }

private:
    std::uint64_t required_bytes_;
};

// Malformed file content; offset is the byte position where parsing stopped.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(ErrorKind::Format, what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Process exit code used by the command-line tool for each error kind.
inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Input:
        case ErrorKind::Config: return 2;
        case ErrorKind::Numeric:
        case ErrorKind::Resource: return 3;
        case ErrorKind::Format:
        case ErrorKind::Io: return 4;
    }
    return 1;
}

}  // namespace kernel_lab
