#pragma once

#include <stdexcept>
#include <string>

namespace mpsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MPSIM_ERROR(Name)                  \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

MPSIM_ERROR(PastEvent);
MPSIM_ERROR(BadProbability);
MPSIM_ERROR(UnknownSubflow);
MPSIM_ERROR(NothingToSend);
MPSIM_ERROR(WindowOverflow);
MPSIM_ERROR(NoSamples);
MPSIM_ERROR(SizeMismatch);
MPSIM_ERROR(IncompleteGrid);
MPSIM_ERROR(EmptyInput);
MPSIM_ERROR(ZeroBytes);
MPSIM_ERROR(RangeError);
MPSIM_ERROR(IoError);

#undef MPSIM_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, std::string field)
      : Error(msg + " (line " + std::to_string(line) + ", field '" + field + "')"),
        line_(line),
        field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

}  // namespace mpsim
