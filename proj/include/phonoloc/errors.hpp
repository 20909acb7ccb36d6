#pragma once

#include <stdexcept>
#include <string>

namespace phonoloc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Some radial mode has Omega_n^2 <= 0; the chain is not radially stable.
class InstabilityError : public Error {
public:
    InstabilityError(const std::string& what, double critical_beta)
        : Error(what), critical_beta_(critical_beta) {}
    double critical_beta() const noexcept { return critical_beta_; }

private:
    double critical_beta_;
};

class DivergentDetuning : public Error {
public:
    using Error::Error;
};

// Requested support, basis or tensor exceeds the configured cap.
class TooLarge : public Error {
public:
    using Error::Error;
};

class FitInvalid : public Error {
public:
    using Error::Error;
};

class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace phonoloc
