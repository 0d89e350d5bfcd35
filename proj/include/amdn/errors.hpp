#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace amdn {

// Base of every error raised by the library. `category()` names the error
// kind so the CLI can report it without RTTI tricks.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept { return "Error"; }
};

#define AMDN_DEFINE_ERROR(Name)                                            \
  class Name : public Error {                                              \
   public:                                                                 \
    using Error::Error;                                                    \
    const char* category() const noexcept override { return #Name; }       \
  };

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  const char* category() const noexcept override { return "SyntaxError"; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

AMDN_DEFINE_ERROR(SemanticError)
AMDN_DEFINE_ERROR(UnsupportedFeature)
AMDN_DEFINE_ERROR(SchemaMismatch)
AMDN_DEFINE_ERROR(ValidationError)
AMDN_DEFINE_ERROR(NoPlanWithinBudget)
AMDN_DEFINE_ERROR(InapplicableModel)
AMDN_DEFINE_ERROR(PairOutOfScope)
AMDN_DEFINE_ERROR(HardUnsat)
AMDN_DEFINE_ERROR(NoFeasibleFound)
AMDN_DEFINE_ERROR(FormatError)
AMDN_DEFINE_ERROR(HardViolation)
AMDN_DEFINE_ERROR(UnknownVariable)
AMDN_DEFINE_ERROR(EmptyInput)
AMDN_DEFINE_ERROR(MixedVariation)
AMDN_DEFINE_ERROR(ConfigError)

#undef AMDN_DEFINE_ERROR

}  // namespace amdn
