#pragma once

#include <stdexcept>
#include <string>

namespace unleak {

/// Bad experiment configuration (unknown keys, invalid values). CLI exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad input data (missing files, ragged rows, malformed model bytes). CLI exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace unleak
