#ifndef PROFBO_ERRORS_HPP
#define PROFBO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace profbo {

/// Bad caller input: dimension mismatches, empty sets, out-of-range values.
struct invalid_argument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: failed Cholesky after jitter escalation, negative
/// conditional variance, NaN likelihoods, diverged chains.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Geometric degeneracy: input points span a lower-dimensional affine
/// subspace, so no triangulation exists. Remedy (jitter) is the caller's.
struct degeneracy_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or unresolvable experiment configuration.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File-system level failures with the offending path in the message.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace profbo

#endif
