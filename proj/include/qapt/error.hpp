#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qapt {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A rejected program text. Every rejection carries the byte offset where
/// parsing stopped and the set of tokens that would have been accepted there.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t position, std::vector<std::string> expected)
      : Error(what), position_(position), expected_(std::move(expected)) {}

  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

/// Malformed program text.
class SyntaxError : public ParseError {
public:
  using ParseError::ParseError;
};

class InvalidParams : public Error {
public:
  using Error::Error;
};

/// A simulator state became non-finite; usually dt is too large for the
/// requested parameters.
class NumericalBlowup : public Error {
public:
  NumericalBlowup(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

class UnknownForm : public Error {
public:
  using Error::Error;
};

class InvalidBinding : public Error {
public:
  using Error::Error;
};

class NoMatch : public Error {
public:
  using Error::Error;
};

class NotExpressible : public Error {
public:
  using Error::Error;
};

class InsufficientUnique : public Error {
public:
  using Error::Error;
};

class EmptyInput : public Error {
public:
  using Error::Error;
};

}  // namespace qapt
