#pragma once

#include <stdexcept>
#include <string>

namespace kgq {

// Base error for anything the pipeline can reject.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user input: paths, config values, malformed files. CLI exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Numerical failure during training (non-finite loss or parameters).
// CLI exit code 3.
struct NumericalError : Error {
    using Error::Error;
};

}  // namespace kgq
