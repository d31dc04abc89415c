#pragma once

#include <stdexcept>
#include <string>

namespace cascadegp {

enum class ErrorKind {
  kDimensionMismatch,
  kNonFinite,
  kInvalidArgument,
  kFactorization,
  kParse,
  kIo,
  kMissingInput,
  kConfig,
};

const char* to_string(ErrorKind kind);

/// Library-wide exception. `kind` classifies the failure; `what()` carries
/// the human-readable detail (offending index, file line, key name, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cascadegp
