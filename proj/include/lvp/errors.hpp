#pragma once

#include <stdexcept>
#include <string>

namespace lvp {

// Malformed arguments: dimension mismatches, non-finite values, empty inputs
// where something is required.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Problems with data loaded from disk or with data that does not fit the
// requested operation (missing text vectors, class-set mismatches).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BadMagic : public DataError {
public:
    using DataError::DataError;
};

class VersionMismatch : public DataError {
public:
    using DataError::DataError;
};

class Truncated : public DataError {
public:
    using DataError::DataError;
};

class TrailingBytes : public DataError {
public:
    using DataError::DataError;
};

class CorruptPayload : public DataError {
public:
    using DataError::DataError;
};

// Optimisation diverged or a computation hit a degenerate point.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lvp
