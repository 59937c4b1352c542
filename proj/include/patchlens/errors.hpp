#pragma once

#include <stdexcept>
#include <string>

namespace patchlens {

// Base of every domain error raised by the library. `code()` is the stable
// machine-readable tag used by the CLI and the HTTP API.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define PATCHLENS_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

PATCHLENS_DEFINE_ERROR(TargetNotExecuted)
PATCHLENS_DEFINE_ERROR(ProbeResolutionError)
PATCHLENS_DEFINE_ERROR(PatchParseError)
PATCHLENS_DEFINE_ERROR(NoDefinition)
PATCHLENS_DEFINE_ERROR(AlignmentError)
PATCHLENS_DEFINE_ERROR(CorpusError)
PATCHLENS_DEFINE_ERROR(NoPlausiblePatch)
PATCHLENS_DEFINE_ERROR(UnknownBug)
PATCHLENS_DEFINE_ERROR(UnknownCluster)
PATCHLENS_DEFINE_ERROR(UnknownPatch)
PATCHLENS_DEFINE_ERROR(UnknownSession)
PATCHLENS_DEFINE_ERROR(EmptyActiveSet)
PATCHLENS_DEFINE_ERROR(FormatError)

#undef PATCHLENS_DEFINE_ERROR

// Raised by the parser and the static checker.
class SyntaxError : public Error {
 public:
  SyntaxError(int line, int column, const std::string& message)
      : Error("SyntaxError", std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

// A stage of the session pipeline failed; `stage()` names it.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& message)
      : Error("PipelineError", stage + ": " + message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace patchlens
