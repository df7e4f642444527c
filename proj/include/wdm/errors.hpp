#ifndef WDM_ERRORS_HPP
#define WDM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wdm {

// Error taxonomy shared across the library. Each category maps to a
// distinct CLI exit code (see harness.hpp).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor shapes do not line up for the requested operation.
struct DimensionError : Error {
    using Error::Error;
};

// An argument is outside its documented domain.
struct ParameterError : Error {
    using Error::Error;
};

// A computation produced or received a non-finite value.
struct NumericError : Error {
    using Error::Error;
};

// An API contract was violated (e.g. backward on a non-scalar).
struct ContractError : Error {
    using Error::Error;
};

// Degenerate inputs to a statistical procedure.
struct StatisticalError : Error {
    using Error::Error;
};

// Malformed input file.
struct ParseError : Error {
    using Error::Error;
};

// Filesystem failures.
struct IoError : Error {
    using Error::Error;
};

// Invalid or inconsistent experiment configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Checkpoint checksum mismatch.
struct CorruptionError : Error {
    using Error::Error;
};

// Checkpoint format version mismatch.
struct MigrationError : Error {
    using Error::Error;
};

}  // namespace wdm

#endif
