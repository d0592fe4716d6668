#pragma once

#include <stdexcept>
#include <string>

namespace geocell {

// Base class for all errors raised by this library. The CLI maps subtypes
// onto process exit codes (data=2, version=3, numeric=4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user/file input: malformed records, impossible parameters, etc.
struct DataError : Error {
    using Error::Error;
};

struct InvalidCoordinate : DataError {
    using DataError::DataError;
};

struct InvalidLevel : DataError {
    using DataError::DataError;
};

struct InvalidArgument : DataError {
    using DataError::DataError;
};

struct ParseError : DataError {
    using DataError::DataError;
};

struct EmptyDataset : DataError {
    using DataError::DataError;
};

struct DegeneratePartition : DataError {
    using DataError::DataError;
};

struct SignatureError : DataError {
    using DataError::DataError;
};

struct ConfigError : DataError {
    using DataError::DataError;
};

// A model checkpoint does not match the partition it is being used with.
struct VersionMismatch : Error {
    using Error::Error;
};

// Training or inference produced a non-finite value.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace geocell
