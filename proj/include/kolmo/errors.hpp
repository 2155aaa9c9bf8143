#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kolmo {

/// Invalid user-facing configuration (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite state or failed numerical procedure (maps to CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::size_t step_index = 0)
        : std::runtime_error(what), step_index_(step_index) {}
    std::size_t step_index() const { return step_index_; }

private:
    std::size_t step_index_;
};

}  // namespace kolmo
