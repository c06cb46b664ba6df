#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace collabperf {

/// Base of every library exception. `is_input()` separates bad input
/// (files, configs, arguments) from failures during computation; the CLI
/// maps the two onto exit codes 2 and 3.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, bool input) : std::runtime_error(what), input_(input) {}
  bool is_input() const noexcept { return input_; }

 private:
  bool input_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what, true), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

#define COLLABPERF_ERROR(Name, input)                               \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(what, input) {}  \
  }

COLLABPERF_ERROR(ValidationError, true);
COLLABPERF_ERROR(SchemaError, true);
COLLABPERF_ERROR(LinkageError, true);
COLLABPERF_ERROR(ConfigError, true);
COLLABPERF_ERROR(InputError, true);
COLLABPERF_ERROR(ScenarioError, false);
COLLABPERF_ERROR(RangeError, false);
COLLABPERF_ERROR(IndexError, false);
COLLABPERF_ERROR(FitError, false);
COLLABPERF_ERROR(DegenerateError, false);
COLLABPERF_ERROR(DomainError, false);
COLLABPERF_ERROR(CoverageError, false);
COLLABPERF_ERROR(BudgetError, false);
COLLABPERF_ERROR(ConsistencyError, false);

#undef COLLABPERF_ERROR

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, long long step)
      : Error(what + " (step " + std::to_string(step) + ")", false), step_(step) {}
  long long step() const noexcept { return step_; }

 private:
  long long step_;
};

}  // namespace collabperf
