#pragma once

#include <stdexcept>
#include <string>

namespace augscale {

// Error taxonomy maps one-to-one onto CLI exit codes:
// UsageError -> 1, DataError -> 2, NumericalError -> 3.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace augscale
