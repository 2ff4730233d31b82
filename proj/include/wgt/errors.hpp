#pragma once

#include <stdexcept>
#include <string>

namespace wgt {

// Base of every error raised by the library. Mathematical findings that are
// not failures (a singular B(z), a non-terminating ladder) are reported in
// result structs instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    SingularityError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

// The contour of a Riesz projection hits (or passes too close to) the spectrum,
// or the zero eigenvalue is not isolated.
class SpectrumError : public Error {
public:
    using Error::Error;
};

class AccuracyError : public Error {
public:
    using Error::Error;
};

// Parameter outside the region where a series or expansion is certified.
class DomainError : public Error {
public:
    using Error::Error;
};

class ModelError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class ChannelClosedError : public Error {
public:
    using Error::Error;
};

class TruncationError : public Error {
public:
    using Error::Error;
};

class StructuralError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace wgt
