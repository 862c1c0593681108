#pragma once

#include <stdexcept>
#include <string>

namespace dcys {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError / UsageError -> 2, DataError / ParseError -> 3, NumericError -> 4.

class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& msg) : std::invalid_argument(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dcys
