#pragma once

#include <stdexcept>
#include <string>

namespace sketchguard {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid user-supplied parameter (out-of-range epsilon, bad partition count, ...).
struct param_error : error {
    using error::error;
};

// A counter would exceed its configured logical width.
struct overflow_error : error {
    using error::error;
};

// A linear combination produced a negative or non-integral counter, or a
// recovery plan was applied against mismatching inputs.
struct recovery_error : error {
    using error::error;
};

// Malformed share payload or header on decode.
struct wire_error : error {
    using error::error;
};

// File and config handling.
struct io_error : error {
    using error::error;
};

}  // namespace sketchguard
