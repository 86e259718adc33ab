#pragma once

#include <stdexcept>
#include <string>

namespace admitlab {

// Invalid model parameters, unknown policy handles, bad experiment configs.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what, std::string field = {})
        : std::invalid_argument(what), field_(std::move(field)) {}

    // Name of the offending configuration field, empty when not applicable.
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// A time or index query outside the generated horizon.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Malformed call arguments (e.g. reversed interval endpoints).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A statistical estimate could not be formed from the available samples.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace admitlab
