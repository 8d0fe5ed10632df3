#pragma once

#include <stdexcept>
#include <string>

namespace gcpt {

/// Bad configuration or usage: invalid parameter ranges, impossible setups.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or unusable input data: parse failures, missing files, empty corpora.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric failure: non-finite values, divergence during training.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace gcpt
