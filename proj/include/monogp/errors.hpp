#pragma once

#include <stdexcept>
#include <string>

namespace monogp {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix arguments of incompatible size.
class ShapeError : public Error
{
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of the operation.
class DomainError : public Error
{
public:
  using Error::Error;
};

/// Cholesky factorization failed even at the largest jitter on the ladder.
class NumericalError : public Error
{
public:
  NumericalError(const std::string& what, double jitter)
    : Error(what), jitter_(jitter)
  {}

  double jitter() const noexcept { return jitter_; }

private:
  double jitter_;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

class DataError : public Error
{
public:
  using Error::Error;
};

class InitializationError : public Error
{
public:
  using Error::Error;
};

class DiagnosticError : public Error
{
public:
  using Error::Error;
};

class SchemeError : public Error
{
public:
  using Error::Error;
};

}  // namespace monogp
