#ifndef KINSPEC_ERRORS_HH
#define KINSPEC_ERRORS_HH

#include <stdexcept>
#include <string>

namespace kinspec {

// Invalid or inconsistent run configuration (CLI exit code 2).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown: overflow on collapse, singular factor, non-finite
// integrand, eigensolver failure (CLI exit code 3).
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace kinspec

#endif
