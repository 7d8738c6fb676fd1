#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace warcrace {

/// Base error for everything this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parse failure tied to a byte offset in the input.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::uint64_t offset)
        : Error(message + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

}  // namespace warcrace
