#pragma once

#include <stdexcept>
#include <string>

namespace pvt {

// Base error for all library failures. Messages name the offending input.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Data-level failure: missing file, malformed manifest, bad config.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Numeric failure: NaN/Inf encountered where finite values are required.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace pvt
