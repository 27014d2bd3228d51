#pragma once

#include <stdexcept>
#include <string>

namespace cyllab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidGrid : public Error { using Error::Error; };
class OutOfWindow : public Error { using Error::Error; };
class OutOfBall : public Error { using Error::Error; };
class BandError : public Error { using Error::Error; };
class PreconditionError : public Error { using Error::Error; };
class NoContraction : public Error { using Error::Error; };
class BallViolation : public Error { using Error::Error; };

/// An estimate was asked for outside the regime where it is claimed.
class Inapplicable : public Error { using Error::Error; };

class ConfigError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

}  // namespace cyllab
