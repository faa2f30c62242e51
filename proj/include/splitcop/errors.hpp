#pragma once

#include <stdexcept>
#include <string>

namespace splitcop {

// Bad inputs: out-of-domain parameters, malformed files, violated preconditions.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures: non-convergence, degenerate likelihood surfaces.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid run configuration.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace splitcop
