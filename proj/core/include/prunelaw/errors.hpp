// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace prunelaw {

/// Coarse classification used by front-ends to pick an exit status.
enum class ErrorKind {
  Input,       // malformed or out-of-range input, precondition violations
  Numeric,     // optimizer did not converge, training diverged
  Infeasible,  // a well-posed request that has no solution
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  [[nodiscard]] virtual ErrorKind kind() const noexcept { return ErrorKind::Input; }
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::size_t line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + ": field '" + field + "': " + what),
        line_(line),
        field_(std::move(field)) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// A fit or evaluation referenced (family, l, w, n) keys the unpruned-error
/// table does not contain.
class CoverageError : public Error {
 public:
  CoverageError(std::vector<std::string> missing, const std::string& what)
      : Error(what), missing_(std::move(missing)) {}
  [[nodiscard]] const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class InconsistencyError : public Error {
 public:
  using Error::Error;
};

class DegenerateCurveError : public Error {
 public:
  using Error::Error;
};

/// Requested error lies outside the open interval between the two plateaus.
class OutOfRangeError : public Error {
 public:
  OutOfRangeError(double low_plateau, double high_plateau, const std::string& what)
      : Error(what), low_(low_plateau), high_(high_plateau) {}
  [[nodiscard]] ErrorKind kind() const noexcept override { return ErrorKind::Infeasible; }
  [[nodiscard]] double low_plateau() const noexcept { return low_; }
  [[nodiscard]] double high_plateau() const noexcept { return high_; }

 private:
  double low_;
  double high_;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ErrorKind kind() const noexcept override { return ErrorKind::Infeasible; }
};

/// Local minimization hit its iteration cap. Carries the best point found;
/// law fits report it as (eps_high, gamma, p or p', phi, psi).
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(std::vector<double> best_so_far, int iterations, const std::string& what)
      : Error(what), best_(std::move(best_so_far)), iterations_(iterations) {}
  [[nodiscard]] ErrorKind kind() const noexcept override { return ErrorKind::Numeric; }
  [[nodiscard]] const std::vector<double>& best_so_far() const noexcept { return best_; }
  [[nodiscard]] int iterations() const noexcept { return iterations_; }

 private:
  std::vector<double> best_;
  int iterations_;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ErrorKind kind() const noexcept override { return ErrorKind::Numeric; }
};

}  // namespace prunelaw
