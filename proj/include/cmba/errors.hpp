#pragma once

#include <stdexcept>

namespace cmba {

// Dimension mismatches between vectors, nets, and datasets.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration: empty datasets, bad victim sets,
// infeasible constraint boxes, malformed experiment configs.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed files: model containers, config files, CSV tables.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace cmba
