#pragma once

#include <stdexcept>
#include <string>

namespace adaptcl {

/// Shape disagreement between tensors or layer wiring.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid value fed to an operation (label out of range, empty dataset, ...).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration: invalid key, missing field, non-integral conv output.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value surfaced during training or an update.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operation called in the wrong order (backward without cached forward).
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed file (IDX container, checkpoint).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// No free parameters left to allocate (PackNet*-style schedules).
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace adaptcl
