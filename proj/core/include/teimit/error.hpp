#pragma once

#include <stdexcept>
#include <string>

namespace teimit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a documented precondition or type invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix sizes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text; `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Random instance generation could not satisfy its constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// The interior-point solver failed (stall, factorization, certificate).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for the given instance (e.g. zero optimum).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, int batch)
      : Error(what), batch_(batch) {}
  int batch() const { return batch_; }

 private:
  int batch_;
};

}  // namespace teimit
