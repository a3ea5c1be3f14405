#pragma once

#include <stdexcept>
#include <string>

namespace fedns {

// Invalid configuration values or argument combinations.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensors or layers disagree in count, shape, or order.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File missing, unreadable, or malformed on disk.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient encountered during local training.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fedns
