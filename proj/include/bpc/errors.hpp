#pragma once

#include <stdexcept>
#include <string>

namespace bpc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Cholesky failed on a matrix that should be SPD, even after jitter.
struct IllConditionedError : Error {
    using Error::Error;
};

// Natural parameters no longer map to a valid moment-form posterior.
struct DegeneratePosteriorError : Error {
    using Error::Error;
};

// Inverse-Wishart mean requested with too few degrees of freedom.
struct UndefinedMeanError : Error {
    using Error::Error;
};

// Non-finite values appeared during latent-state relaxation or training.
struct DivergenceError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace bpc
