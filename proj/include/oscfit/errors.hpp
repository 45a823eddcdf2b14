#pragma once

#include <stdexcept>
#include <string>

namespace oscfit {

// Malformed or inconsistent input: bad CSV, non-uniform grids, duplicate
// pairs. The CLI maps this to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-gesture estimation failure. Batch drivers catch these and record a
// skip instead of aborting.
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Feature matrix is rank-deficient (e.g. constant position and velocity).
struct SingularSystemError : FitError {
    using FitError::FitError;
};

// |k| below threshold, so T = c/k is ill-posed.
struct TargetUndefinedError : FitError {
    using FitError::FitError;
};

// Estimated k <= 0: no point attractor, trajectory cannot be re-integrated
// against a target.
struct NonAttractorError : FitError {
    using FitError::FitError;
};

}  // namespace oscfit
