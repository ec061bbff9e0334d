#pragma once

#include <stdexcept>

namespace polygnn {

// Error categories; the CLI maps each one onto its own exit code.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ChecksumError : IoError {
    using IoError::IoError;
};

struct ArchitectureMismatch : ConfigError {
    using ConfigError::ConfigError;
};

}  // namespace polygnn
