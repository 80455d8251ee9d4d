#pragma once

#include <stdexcept>
#include <string>

namespace costwise {

/// Invalid user-supplied configuration (CLI exit code 2).
class config_error : public std::invalid_argument {
public:
    explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation that could not reach its accuracy target (CLI exit code 3).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace costwise
