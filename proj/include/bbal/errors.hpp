#pragma once

#include <stdexcept>
#include <string>

namespace bbal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input: bad files, invalid ids, non-finite values.
class InputError : public Error {
public:
    using Error::Error;
};

/// A well-formed request that cannot be satisfied (e.g. batch larger than the pool).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

}  // namespace bbal
