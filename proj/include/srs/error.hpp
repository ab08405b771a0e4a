#pragma once

#include <stdexcept>
#include <string>

namespace srs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
  using Error::Error;
};

class InvalidIndex : public Error {
public:
  using Error::Error;
};

/// Carries the last measured change between successive cutoff levels.
class TruncationFailure : public Error {
public:
  TruncationFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

class QuadratureFailure : public Error {
public:
  using Error::Error;
};

class NoCrossover : public Error {
public:
  using Error::Error;
};

class NonCommuting : public Error {
public:
  NonCommuting(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

class CoincidentAtoms : public Error {
public:
  using Error::Error;
};

class SamplingError : public Error {
public:
  using Error::Error;
};

class EvolutionError : public Error {
public:
  using Error::Error;
};

} // namespace srs
