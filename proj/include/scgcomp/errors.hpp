#pragma once

#include <stdexcept>
#include <string>

namespace scgcomp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments or unsupported combinations of options.
class UsageError : public Error
{
  public:
    using Error::Error;
};

/// Input data that violates the longitudinal panel structure.
class ValidationError : public Error
{
  public:
    using Error::Error;
};

/// A regression that failed to converge, or separated data.
class FitError : public Error
{
  public:
    using Error::Error;
};

/// No individuals available to fit or predict at some interval.
class EmptyRiskSetError : public Error
{
  public:
    using Error::Error;
};

/// A conditioning cell with zero probability in an identification formula.
class PositivityError : public Error
{
  public:
    using Error::Error;
};

/// Outcome history too short to determine the state at the horizon.
class InsufficientFollowUpError : public Error
{
  public:
    using Error::Error;
};

}  // namespace scgcomp
