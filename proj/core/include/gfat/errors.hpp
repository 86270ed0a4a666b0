#pragma once

#include <stdexcept>
#include <string>

namespace gfat {

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonFiniteInput : std::runtime_error {
    explicit NonFiniteInput(const std::string& msg) : std::runtime_error(msg) {}
};

// A core's SRAM budget would be exceeded. Carries the offending coordinate
// in the message.
struct SramOverflow : std::runtime_error {
    explicit SramOverflow(const std::string& msg) : std::runtime_error(msg) {}
};

struct SpecError : std::runtime_error {
    explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

struct OracleMismatch : std::runtime_error {
    explicit OracleMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gfat
