#pragma once

#include <stdexcept>
#include <string>

namespace unlearn {

// Configuration rejected before any work starts (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or mismatched data: parse failures, hash mismatches,
// out-of-bounds features (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values encountered during numeric work (CLI exit code 4).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace unlearn
