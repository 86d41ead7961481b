#pragma once

#include <stdexcept>
#include <string>

namespace slelab {

// Error taxonomy. Every throw site names the violated contract in the message.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// bad user input (out-of-range parameter, malformed config)
struct validation_error : error {
    using error::error;
};

// a configurable cap was exceeded (step count, grid level)
struct resource_error : error {
    using error::error;
};

// argument ordering / regime preconditions violated
struct domain_error : error {
    using error::error;
};

// parameter outside the regime a formula is stated for
struct regime_error : error {
    using error::error;
};

// quadrature or iteration failed to reach its tolerance
struct numeric_error : error {
    using error::error;
};

// degenerate geometry (collapsed triangle)
struct geometry_error : error {
    using error::error;
};

// computed value contradicts an invariant it should satisfy
struct consistency_error : error {
    using error::error;
};

// ODE / flow evaluation produced non-finite state
struct solver_error : error {
    using error::error;
};

// random-walk sampler exhausted its step budget
struct sampler_error : error {
    using error::error;
};

// result store contract violations (duplicate run id, bad directory)
struct store_error : error {
    using error::error;
};

} // namespace slelab
