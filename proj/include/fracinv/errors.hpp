#pragma once

#include <stdexcept>
#include <string>

namespace fracinv {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter lies outside its admissible range (d, bandwidth, model constants).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An operation was asked for zero elements or given an empty series.
class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// The Type I pre-sample needed for the requested tail tolerance exceeds the cap.
class TruncationInfeasibleError : public Error {
public:
    using Error::Error;
};

/// Bartlett long-run variance is zero, so R/S and KPSS are undefined.
class DegenerateVarianceError : public Error {
public:
    using Error::Error;
};

/// A file could not be read/written or failed a format check.
class FormatError : public Error {
public:
    using Error::Error;
};

/// No quantile table matches the request and building was not allowed.
class MissingTableError : public Error {
public:
    using Error::Error;
};

/// A configuration file or key set is invalid.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace fracinv
