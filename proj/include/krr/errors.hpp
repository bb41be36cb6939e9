#pragma once
#include <stdexcept>
#include <string>

namespace krr {

// Bad inputs: dimension mismatches, invalid specs, config problems. CLI exit 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numerical failures: non-finite values, solver breakdown. CLI exit 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace krr
