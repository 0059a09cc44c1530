#pragma once

#include <stdexcept>
#include <string>

namespace rwprof {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that cannot be read as the expected format.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input that parses but violates a precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Raised by stage-1 scoring when a trace has nothing to score.
class UnscorableTrace : public Error {
 public:
  enum class Reason { insufficient_duration, no_file_activity };

  explicit UnscorableTrace(Reason reason)
      : Error(reason == Reason::insufficient_duration ? "insufficient duration"
                                                      : "no file activity"),
        reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

}  // namespace rwprof
