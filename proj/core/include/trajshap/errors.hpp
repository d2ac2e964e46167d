#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trajshap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// scene text ingestion
class MalformedLineError : public Error {
 public:
  MalformedLineError(size_t line, const std::string& detail)
      : Error("malformed line " + std::to_string(line) + ": " + detail), line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

class TooManyAgentsError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// metrics
class LengthMismatchError : public Error {
 public:
  using Error::Error;
};

// training
class NonFiniteLossError : public Error {
 public:
  using Error::Error;
};

// shapley
class TooManyFeaturesError : public Error {
 public:
  using Error::Error;
};

// attribution pools
class InsufficientPoolError : public Error {
 public:
  using Error::Error;
};

// aggregation
class EmptyInputAggregateError : public Error {
 public:
  using Error::Error;
};

}  // namespace trajshap
