// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fgdm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad caller input: shapes, ranges of indices, malformed options.
class ArgumentError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A file or payload was readable but not in an accepted encoding.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Pixel values outside the representable range of an output format.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Evaluation outside the mathematical domain (e.g. power law at f = 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Training produced non-finite losses repeatedly.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace fgdm
