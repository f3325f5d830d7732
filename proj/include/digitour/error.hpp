#pragma once

#include <stdexcept>
#include <string>

namespace digitour {

// Base for every error raised by the library. The CLI maps IoError to exit
// code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class InvalidTagNumber : public Error {
 public:
  explicit InvalidTagNumber(int number)
      : Error("tag number out of range 1..20: " + std::to_string(number)) {}
};

class InvalidImage : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class InvalidScene : public Error {
 public:
  using Error::Error;
};

class InvalidProperty : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

}  // namespace digitour
