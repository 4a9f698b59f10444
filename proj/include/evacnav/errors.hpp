#pragma once

#include <stdexcept>
#include <string>

namespace evacnav {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed building or config text.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a model invariant (duplicate id, dangling edge, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class UnknownNodeError : public Error {
 public:
  explicit UnknownNodeError(long long id)
      : Error("unknown node " + std::to_string(id)), id_(id) {}
  long long id() const noexcept { return id_; }

 private:
  long long id_;
};

// Violated operation precondition (igniting a burning node, selecting with every neuron masked, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Fixed-point iteration hit its cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace evacnav
