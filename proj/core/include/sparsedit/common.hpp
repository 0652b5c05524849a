#pragma once

#include <stdexcept>
#include <string>

namespace sparsedit {

// Shape disagreement between operands; message names both shapes.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration value; message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent checkpoint file; message names the entry.
class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// NaN/Inf encountered where finite values are required.
class NumericsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sparsedit
