#pragma once

#include <stdexcept>
#include <string>

namespace ssp {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A file or record does not follow its declared format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// A caller broke a documented precondition (non-scalar loss, empty pooling set, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// An input collection that must be nonempty was empty.
class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// A value lies outside its admissible domain.
class ValueError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace ssp
