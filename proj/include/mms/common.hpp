#pragma once

#include <stdexcept>
#include <string>

namespace mms {

inline constexpr const char* kVersion = "0.1.0";

// Bad inputs: mis-sized fields, invalid parameters, malformed configs.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: non-convergence, non-finite intermediates.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mms
