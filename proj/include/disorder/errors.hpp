#pragma once

#include <stdexcept>
#include <string>

namespace disorder {

// Thrown when an observation has zero one-step density under the model mixture.
struct ZeroLikelihoodError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Brute-force oracle guards.
struct PrefixTooLongError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TreeTooLargeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unbounded density ratio detected by a solver (model escaped validation).
struct DivergentRatioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad run configuration (missing file, unparsable JSON, out-of-range flag).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace disorder
