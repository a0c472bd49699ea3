#pragma once

#include <stdexcept>
#include <string>

namespace hrank {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a comparison or division cannot be decided at the current
// working precision. Precision-escalation loops catch this family.
struct PrecisionError : Error {
    using Error::Error;
};

struct PrecisionExhausted : Error {
    using Error::Error;
};

struct TieBreak : PrecisionError {
    using PrecisionError::PrecisionError;
};

struct AmbiguousMatch : PrecisionError {
    using PrecisionError::PrecisionError;
};

struct SingularFrame : PrecisionError {
    using PrecisionError::PrecisionError;
};

struct DomainError : Error {
    using Error::Error;
};

struct PoleError : Error {
    using Error::Error;
};

struct IndexError : Error {
    using Error::Error;
};

struct NotAZero : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IterationCap : Error {
    using Error::Error;
};

struct DegenerateVector : Error {
    using Error::Error;
};

struct QuadratureStall : Error {
    using Error::Error;
};

struct SchemaError : Error {
    using Error::Error;
};

struct NeedMoreStages : Error {
    NeedMoreStages(const std::string& what, int required)
        : Error(what), required_stages(required) {}
    int required_stages;
};

}  // namespace hrank
