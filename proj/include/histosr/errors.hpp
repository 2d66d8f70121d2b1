#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace histosr {

// Error taxonomy. The CLI maps these onto stable exit codes:
// configuration/shape -> 2, data/format/io -> 3, numeric -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/kernel dimensions do not line up.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid argument, option, or hyperparameter value.
struct ConfigError : Error {
    using Error::Error;
};

// A file or stream does not match its declared format.
struct FormatError : Error {
    FormatError(const std::string& msg, std::uint64_t offset)
        : Error(msg + " (byte offset " + std::to_string(offset) + ")"), byte_offset(offset) {}
    std::uint64_t byte_offset = 0;
};

// Filesystem/OS level failure.
struct IoError : Error {
    using Error::Error;
};

// Non-finite values or other numeric breakdown.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace histosr
