#pragma once

#include <stdexcept>
#include <string>

namespace sphsps {

/// Coordinate or vector outside the domain of a projection.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Invalid algorithm parameter (K, N, lambda, ...).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed, missing or mis-sized input file or raster.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Collinear or antipodal vectors where a frame was requested.
struct DegenerateError : std::domain_error {
    using std::domain_error::domain_error;
};

}  // namespace sphsps
