#pragma once

#include <stdexcept>
#include <string>

namespace rankbench {

// Invalid run configuration: bad key, out-of-range hyperparameter, etc.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data violates a dataset invariant (bad price, bad date, misalignment).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem failure: missing file, unreadable checkpoint, write error.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Optimisation aborted, e.g. a non-finite loss.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rankbench
