#pragma once

#include <stdexcept>
#include <string>

namespace beebo {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

// Factorization failure, singular systems, non-finite log-determinants.
class NumericalError : public Error {
public:
    using Error::Error;
};

// A point was evaluated outside a problem's box.
class DomainError : public Error {
public:
    using Error::Error;
};

class InfeasibleConstraint : public Error {
public:
    using Error::Error;
};

class UnknownProblem : public Error {
public:
    using Error::Error;
};

class OptimizationFailed : public Error {
public:
    OptimizationFailed(const std::string& what, int starts_tried)
        : Error(what), starts_tried_(starts_tried) {}

    int starts_tried() const noexcept { return starts_tried_; }

private:
    int starts_tried_;
};

} // namespace beebo
