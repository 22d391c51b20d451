#pragma once

#include <stdexcept>
#include <string>

namespace kronex {

// Bad input data: malformed files, out-of-range values, degenerate scales.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem or stream failure.
struct IoError : DataError {
    explicit IoError(const std::string& what) : DataError(what) {}
};

// An iterative solver ran out of its iteration budget.
struct ConvergenceError : DataError {
    explicit ConvergenceError(const std::string& what) : DataError(what) {}
};

// An artifact failed an integrity check (checksum, count, analytic identity).
struct VerificationError : std::runtime_error {
    explicit VerificationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kronex
