#pragma once

#include <stdexcept>
#include <string>

namespace m2 {

// Validation / malformed-input failures. CLI maps these to exit code 2.
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failures (divergence, rank deficiency, non-convergence).
// CLI maps these to exit code 3.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace m2
